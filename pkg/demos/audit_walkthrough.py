# # Auditing both halves of the ledger
#
# The chain is immutable and can be checked link by link. The variable
# state changes every epoch, but each block's control shard lets anyone
# confirm that the keeper re-keyed it honestly.
#
# Run with:  python3 demos/audit_walkthrough.py

import dataclasses
import random

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from maskshards import codec
from maskshards.bilinear import ToyGroup
from maskshards.ledger import (
    EncapsulatedKey,
    append_block,
    audit_chain,
    audit_variable_state,
    new_ledger,
    signature_warrant,
    update_epoch,
)
from maskshards.protocol import keeper_issue_token, keeper_setup, user_encrypt, user_keygen

rng = random.Random(7)

# The toy backend (integers mod 101) keeps everything small enough to print.
G = ToyGroup(101)
params, shards, keeper = keeper_setup(G, 4, rng)
chain, state = new_ledger(params, shards)
owner_key = Ed25519PrivateKey.from_private_bytes(bytes(32))
user = user_keygen(G, rng)

for text in [b"abcd", b"efg", b"hijk", b"lm", b"nopq", b"r"]:
    payload = user_encrypt(params, user, keeper_issue_token(keeper, user.q), state.shards, text, rng)
    append_block(chain, state, payload, warrant=signature_warrant(owner_key))

print(audit_chain(chain).to_text())

# ## Several epochs later
#
# Control shards never change, yet the check still passes after each update.

for _ in range(3):
    state, keeper = update_epoch(state, keeper, rng)
print(audit_variable_state(chain, state).to_text())

# ## A dishonest keeper
#
# Corrupting shard 2 breaks exactly the blocks that use it as their control
# slot: blocks 2 and 6 on a 4-shard ledger.

bad = list(state.shards.shards)
bad[1] = bad[1] * G.g1_base()
forged = dataclasses.replace(state, shards=dataclasses.replace(state.shards, shards=tuple(bad)))
print(audit_variable_state(chain, forged).to_text())

# Swapping one encapsulated key is caught too.

keys = dict(state.keys)
keys[4] = EncapsulatedKey(4, state.epoch, keys[4].k1 * G.g2_base())
print(audit_variable_state(chain, dataclasses.replace(state, keys=keys)).to_text())

# ## A flipped bit on disk
#
# The serialized chain is decoded before it is audited, so damage is
# pinned to a record.

data = bytearray(codec.encode_chain(chain))
data[len(data) // 2] ^= 0x01
print(codec.audit_chain_bytes(bytes(data), params).to_text())

# # One-time access with updating masking shards
#
# A data owner publishes a file on the ledger, unlocks it for a service
# provider, and the file keeper then advances the epoch. The old grant stops
# working and a fresh one is needed.
#
# Run with:  python3 demos/revocation_walkthrough.py

import random

from maskshards import production_group
from maskshards.errors import IntegrityError
from maskshards.ledger import decrypt_block, new_ledger, append_block, update_epoch
from maskshards.protocol import (
    keeper_issue_token,
    keeper_setup,
    provider_keygen,
    provider_open_grant,
    user_encrypt,
    user_keygen,
    user_seal_grant,
    user_unlock,
)

rng = random.Random(42)  # fixed seed so the printout is reproducible
G = production_group()

# ## Setting up
#
# Each masking shard hides one GT-sized piece of a block, so a 4-shard ledger
# holds blocks of up to 4 * 576 bytes.

params, shards, keeper = keeper_setup(G, 4 * G.pad_width, rng)
chain, state = new_ledger(params, shards)
print(f"{params.shard_count} shards of {params.shard_width} bytes, epoch {state.epoch}")

alice = user_keygen(G, rng)
acme = provider_keygen(G, rng)

# ## Publishing
#
# The keeper hands Alice an epoch token; she encrypts and the block goes on
# the chain. The encapsulated key lands in the variable state.

message = b"quarterly figures: revenue up, costs down"
token = keeper_issue_token(keeper, alice.q)
payload = user_encrypt(params, alice, token, state.shards, message, rng)
block = append_block(chain, state, payload)
print(f"block {block.index}: {len(payload.ciphertexts)} shard(s), digest {block.digest.hex()[:16]}...")

# ## Granting access
#
# Alice turns the encapsulated key into an unlocked key and seals it to Acme.

grant = user_seal_grant(G, user_unlock(G, alice, state.keys[1]), acme.public, rng)
unlocked = provider_open_grant(grant, acme.d)
print("acme reads:", decrypt_block(chain, state, 1, unlocked))

# ## Revocation by update
#
# The keeper draws a new time-key. Shards and encapsulated keys are re-keyed,
# and the chain is left alone.

state, keeper = update_epoch(state, keeper, rng)
print(f"advanced to epoch {state.epoch}")
try:
    decrypt_block(chain, state, 1, unlocked)
except IntegrityError as exc:
    print(f"old grant rejected: shards {exc.failed} fail their digests")

# A fresh grant from Alice works again.

grant = user_seal_grant(G, user_unlock(G, alice, state.keys[1]), acme.public, rng)
print("after re-grant:", decrypt_block(chain, state, 1, provider_open_grant(grant, acme.d)))

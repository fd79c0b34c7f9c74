"""Scenario builders shared by several test modules."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from maskshards.bilinear import BilinearGroup
from maskshards.ledger import Chain, VariableState, Variant, append_block, new_ledger, no_warrant
from maskshards.protocol import (
    EncryptedPayload,
    KeeperSecret,
    LedgerParams,
    UserKeypair,
    keeper_issue_token,
    keeper_setup,
    user_encrypt,
    user_keygen,
)


@dataclass
class Scenario:
    params: LedgerParams
    chain: Chain
    state: VariableState
    keeper: KeeperSecret
    users: list[UserKeypair]
    rng: random.Random
    messages: dict[int, bytes] = field(default_factory=dict)
    owners: dict[int, UserKeypair] = field(default_factory=dict)
    payloads: dict[int, EncryptedPayload] = field(default_factory=dict)
    trace: dict = field(default_factory=dict)

    @property
    def group(self) -> BilinearGroup:
        return self.params.group

    def publish(self, message: bytes, user: int = 0, warrant=no_warrant):
        kp = self.users[user]
        token = keeper_issue_token(self.keeper, kp.q)
        payload = user_encrypt(self.params, kp, token, self.state.shards, message, self.rng)
        block = append_block(self.chain, self.state, payload, warrant=warrant)
        self.messages[block.index] = message
        self.owners[block.index] = kp
        self.payloads[block.index] = payload
        return block

    def random_message(self, max_len: int | None = None) -> bytes:
        n = self.rng.randint(1, max_len or self.params.capacity)
        return self.rng.randbytes(n)


def build(
    group: BilinearGroup,
    shards: int = 4,
    blocks: int = 0,
    *,
    seed: int = 0,
    users: int = 2,
    variant: Variant = Variant.FULL,
    pow_difficulty: int = 0,
    warrant=no_warrant,
) -> Scenario:
    rng = random.Random(seed)
    trace: dict = {}
    params, ms, keeper = keeper_setup(group, shards * group.pad_width, rng, trace=trace)
    chain, state = new_ledger(params, ms, variant=variant, pow_difficulty=pow_difficulty)
    sc = Scenario(params, chain, state, keeper, [user_keygen(group, rng) for _ in range(users)], rng,
                  trace=trace)
    for b in range(blocks):
        sc.publish(sc.random_message(), user=b % users, warrant=warrant)
    return sc

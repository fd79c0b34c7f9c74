"""The three protocol roles: File Keeper, User and Service Provider.

Notation used in comments: ``s_j`` is the keeper's time-key at epoch ``j``,
``u_i`` the per-slot setup exponents, ``(mu, v)`` a user's secrets, ``k_b`` the
per-file session scalar. Masking shards live in G1, all user-side keys in G2.
"""

from __future__ import annotations

import hashlib
import secrets
import threading
from collections.abc import Callable
from dataclasses import dataclass

from .bilinear import BilinearGroup, Element, Kind, RandomSource
from .errors import EpochError, IntegrityError, KeeperStateError, ParameterError

HASH_NAME = "sha256"
DIGEST_SIZE = 32


def h(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def _rng(rng: RandomSource | None) -> RandomSource:
    return rng if rng is not None else secrets.SystemRandom()


@dataclass(frozen=True)
class LedgerParams:
    group: BilinearGroup
    shard_count: int
    block_bytes: int
    hash_name: str = HASH_NAME

    @property
    def shard_width(self) -> int:
        return self.group.pad_width

    @property
    def capacity(self) -> int:
        """Largest message, in bytes, that fits in one data block."""
        return self.shard_count * self.shard_width

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LedgerParams):
            return NotImplemented
        return (self.group.description, self.shard_count, self.block_bytes, self.hash_name) == (
            other.group.description, other.shard_count, other.block_bytes, other.hash_name,
        )

    def __hash__(self) -> int:
        return hash((self.group.description, self.shard_count, self.block_bytes))


class KeeperSecret:
    """The keeper's single live time-key.

    Advancing to the next epoch, or rotating the keeper, erases the key held
    here; any later use raises :class:`KeeperStateError`. The lock serializes
    token issuance against epoch changes.
    """

    def __init__(self, group: BilinearGroup, epoch: int, time_key: int):
        if time_key % group.order in (0, 1):
            raise ParameterError("time-key must be neither 0 nor 1")
        self.group = group
        self.epoch = epoch
        self._time_key: int | None = time_key % group.order
        self.lock = threading.RLock()

    @property
    def alive(self) -> bool:
        return self._time_key is not None

    @property
    def time_key(self) -> int:
        if self._time_key is None:
            raise KeeperStateError(f"keeper secret for epoch {self.epoch} has been erased")
        return self._time_key

    def erase(self) -> None:
        self._time_key = None

    def __repr__(self) -> str:
        state = "live" if self.alive else "erased"
        return f"KeeperSecret(epoch={self.epoch}, {state})"


@dataclass(frozen=True)
class MaskingShards:
    epoch: int
    shards: tuple[Element, ...]

    def __len__(self) -> int:
        return len(self.shards)

    def __getitem__(self, i: int) -> Element:
        """1-based access, matching shard slot numbering."""
        if not 1 <= i <= len(self.shards):
            raise IndexError(f"shard index {i} outside 1..{len(self.shards)}")
        return self.shards[i - 1]


@dataclass(frozen=True, repr=False)
class UserKeypair:
    mu: int
    v: int
    q: Element

    def __repr__(self) -> str:
        return f"UserKeypair(q={self.q!r})"


@dataclass(frozen=True)
class EncryptionToken:
    epoch: int
    k0: Element


@dataclass(frozen=True)
class EncapsulatedKey:
    block: int
    epoch: int
    k1: Element


@dataclass(frozen=True)
class UnlockedKey:
    block: int
    epoch: int
    k2: Element


@dataclass(frozen=True, repr=False)
class ProviderKeypair:
    d: int
    public: Element

    def __repr__(self) -> str:
        return f"ProviderKeypair(public={self.public!r})"


@dataclass(frozen=True)
class SealedGrant:
    block: int
    epoch: int
    ephemeral: Element
    masked: Element


@dataclass(frozen=True)
class EncryptedPayload:
    """Output of :func:`user_encrypt`: what the keeper writes into a data block."""

    epoch: int
    ciphertexts: tuple[bytes, ...]
    digests: tuple[bytes, ...]
    length: int
    k1: Element

    def encapsulated(self, block: int) -> EncapsulatedKey:
        return EncapsulatedKey(block, self.epoch, self.k1)


@dataclass(frozen=True)
class Handover:
    """What a retiring keeper passes to its successor."""

    epoch: int
    time_key: int


# ---------------------------------------------------------------------------
# File Keeper
# ---------------------------------------------------------------------------


def shard_count_for(group: BilinearGroup, block_bytes: int) -> int:
    delta = group.pad_width
    if block_bytes < delta:
        raise ParameterError(f"block length {block_bytes} is shorter than one shard ({delta} bytes)")
    return -(-block_bytes // delta)


def keeper_setup(
    group: BilinearGroup,
    block_bytes: int,
    rng: RandomSource | None = None,
    *,
    trace: dict | None = None,
) -> tuple[LedgerParams, MaskingShards, KeeperSecret]:
    """Create ledger parameters, epoch-0 masking shards and the keeper secret.

    The setup exponents ``u_i`` are dropped before returning. Tests may pass
    ``trace`` to receive them under ``trace["u"]``.
    """
    rng = _rng(rng)
    count = shard_count_for(group, block_bytes)
    params = LedgerParams(group, count, block_bytes)
    s0 = group.scalar_random(rng)
    g1 = group.g1_base()
    u = [group.scalar_random(rng) for _ in range(count)]
    shards = MaskingShards(0, tuple(g1 ** (ui * s0) for ui in u))
    if trace is not None:
        trace["u"] = list(u)
    del u
    return params, shards, KeeperSecret(group, 0, s0)


def keeper_next_secret(
    secret: KeeperSecret, rng: RandomSource | None = None, *, time_key: int | None = None
) -> KeeperSecret:
    """Draw the time-key for the next epoch. The current secret stays live;
    callers finish the transition and then erase it."""
    group = secret.group
    current = secret.time_key
    if time_key is None:
        rng = _rng(rng)
        time_key = group.scalar_random(rng)
        while time_key == current:
            time_key = group.scalar_random(rng)
    return KeeperSecret(group, secret.epoch + 1, time_key)


def reshard(old: KeeperSecret, new: KeeperSecret, shards: MaskingShards) -> MaskingShards:
    if shards.epoch != old.epoch:
        raise EpochError(f"shards are from epoch {shards.epoch}, keeper is at epoch {old.epoch}")
    group = old.group
    ratio = new.time_key * group.scalar_inv(old.time_key) % group.order
    return MaskingShards(new.epoch, tuple(e ** ratio for e in shards.shards))


def keeper_update_shards(
    secret: KeeperSecret,
    shards: MaskingShards,
    rng: RandomSource | None = None,
    *,
    time_key: int | None = None,
) -> tuple[MaskingShards, KeeperSecret]:
    """Re-key the masking shards with a fresh time-key and erase the old one.

    Use :func:`maskshards.ledger.update_epoch` when encapsulated keys exist:
    they must be advanced with the same pair of time-keys.
    """
    with secret.lock:
        new = keeper_next_secret(secret, rng, time_key=time_key)
        updated = reshard(secret, new, shards)
        secret.erase()
    return updated, new


def keeper_issue_token(secret: KeeperSecret, q: Element) -> EncryptionToken:
    if q.kind is not Kind.G2:
        raise TypeError("user public keys are G2 elements")
    if q.is_identity():
        raise ParameterError("refusing to issue a token for the identity public key")
    with secret.lock:
        inv = secret.group.scalar_inv(secret.time_key)
        return EncryptionToken(secret.epoch, q ** inv)


def keeper_update_encapsulated(
    old: KeeperSecret, new: KeeperSecret, key: EncapsulatedKey
) -> EncapsulatedKey:
    """Move an encapsulated key from ``old.epoch`` to ``new.epoch``.

    The exponent ratio ``s_old / s_new`` is the inverse of the shard ratio, which
    keeps every control shard unchanged.
    """
    if key.epoch != old.epoch:
        raise EpochError(f"encapsulated key of block {key.block} is from epoch {key.epoch}, "
                         f"expected {old.epoch}")
    group = old.group
    ratio = old.time_key * group.scalar_inv(new.time_key) % group.order
    return EncapsulatedKey(key.block, new.epoch, key.k1 ** ratio)


def keeper_rotate(secret: KeeperSecret, send: Callable[[Handover], None] | None = None) -> Handover:
    """Hand the live time-key to a successor keeper and erase the local copy.

    ``send`` stands in for the confidential channel to the successor.
    """
    with secret.lock:
        record = Handover(secret.epoch, secret.time_key)
        if send is not None:
            send(record)
        secret.erase()
    return record


def keeper_adopt(group: BilinearGroup, record: Handover) -> KeeperSecret:
    return KeeperSecret(group, record.epoch, record.time_key)


# ---------------------------------------------------------------------------
# User
# ---------------------------------------------------------------------------


def user_keygen(group: BilinearGroup, rng: RandomSource | None = None) -> UserKeypair:
    rng = _rng(rng)
    mu = group.scalar_random(rng)
    v = group.scalar_random(rng)
    return UserKeypair(mu, v, group.g2_base() ** mu)


def split_message(message: bytes, width: int) -> list[bytes]:
    """Cut into ``width``-byte pieces, zero-padding the last one."""
    pieces = [message[i : i + width] for i in range(0, len(message), width)]
    pieces[-1] = pieces[-1].ljust(width, b"\0")
    return pieces


def xor(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def user_encrypt(
    params: LedgerParams,
    keypair: UserKeypair,
    token: EncryptionToken,
    shards: MaskingShards,
    message: bytes,
    rng: RandomSource | None = None,
    *,
    trace: dict | None = None,
) -> EncryptedPayload:
    """Encrypt ``message`` for the next data block.

    A fresh session scalar ``k_b`` pads shard ``i`` with
    ``pair(eps_i, k0 ** k_b) = e(g1, g2) ** (u_i * k_b * mu)`` and is dropped
    once the encapsulated key ``k0 ** (v * k_b / mu)`` has been derived.
    """
    if token.epoch != shards.epoch:
        raise EpochError(f"token from epoch {token.epoch} used with shards of epoch {shards.epoch}")
    if not message:
        raise ParameterError("message must not be empty")
    if len(message) > params.capacity:
        raise ParameterError(
            f"message of {len(message)} bytes exceeds block capacity {params.capacity}"
        )
    group = params.group
    pieces = split_message(message, params.shard_width)
    k_b = group.scalar_random(_rng(rng))
    masked_token = token.k0 ** k_b
    ciphertexts = tuple(
        xor(m, group.gt_to_pad(group.pair(shards[i], masked_token)))
        for i, m in enumerate(pieces, start=1)
    )
    exponent = keypair.v * k_b * group.scalar_inv(keypair.mu) % group.order
    k1 = token.k0 ** exponent
    if trace is not None:
        trace["k_b"] = k_b
    return EncryptedPayload(
        epoch=token.epoch,
        ciphertexts=ciphertexts,
        digests=tuple(h(m) for m in pieces),
        length=len(message),
        k1=k1,
    )


def user_unlock(group: BilinearGroup, keypair: UserKeypair, key: EncapsulatedKey) -> UnlockedKey:
    exponent = keypair.mu * group.scalar_inv(keypair.v) % group.order
    return UnlockedKey(key.block, key.epoch, key.k1 ** exponent)


def user_seal_grant(
    group: BilinearGroup, key: UnlockedKey, provider_public: Element,
    rng: RandomSource | None = None,
) -> SealedGrant:
    """ElGamal-style masking of the unlocked key under the provider's public key."""
    if provider_public.is_identity():
        raise ParameterError("provider public key is the identity")
    r = group.scalar_random(_rng(rng))
    return SealedGrant(
        block=key.block,
        epoch=key.epoch,
        ephemeral=group.g2_base() ** r,
        masked=key.k2 * provider_public ** r,
    )


# ---------------------------------------------------------------------------
# Service Provider
# ---------------------------------------------------------------------------


def provider_keygen(group: BilinearGroup, rng: RandomSource | None = None) -> ProviderKeypair:
    d = group.scalar_random(_rng(rng))
    return ProviderKeypair(d, group.g2_base() ** d)


def provider_open_grant(grant: SealedGrant, d: int) -> UnlockedKey:
    return UnlockedKey(grant.block, grant.epoch, grant.masked / grant.ephemeral ** d)


def recover_shards(
    group: BilinearGroup,
    ciphertexts: tuple[bytes, ...] | list[bytes],
    shards: MaskingShards,
    key: UnlockedKey,
) -> list[bytes]:
    return [
        xor(c, group.gt_to_pad(group.pair(shards[i], key.k2)))
        for i, c in enumerate(ciphertexts, start=1)
    ]


def provider_decrypt(
    group: BilinearGroup,
    ciphertexts: tuple[bytes, ...] | list[bytes],
    shards: MaskingShards,
    key: UnlockedKey,
    digests: tuple[bytes, ...] | list[bytes],
    length: int,
) -> bytes:
    """Strip the pads and check every recovered shard against its digest.

    Epochs are deliberately not compared: a stale key still runs and fails
    here, on the digests, which is how revocation shows up.
    """
    if len(ciphertexts) != len(digests):
        raise ParameterError("ciphertext and digest counts differ")
    if len(ciphertexts) > len(shards):
        raise ParameterError("more ciphertext shards than masking shards")
    pieces = recover_shards(group, ciphertexts, shards, key)
    results = [h(m) == dg for m, dg in zip(pieces, digests)]
    if not all(results):
        bad = [i for i, ok in enumerate(results, start=1) if not ok]
        raise IntegrityError(f"digest mismatch on shard(s) {bad}", results)
    return b"".join(pieces)[:length]

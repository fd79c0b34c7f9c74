"""Two-part ledger: an immutable hash-chained block list and an updating state.

The static part stores encrypted shards (or, for shrunk chains, only their
digest), the control shard of each block and a warranty over the block
digest. The updating part holds the current masking shards and one
encapsulated key per block; the keeper re-keys all of it at every epoch.

Anyone holding both parts can audit them: :func:`audit_chain` recomputes the
hash chain, :func:`audit_variable_state` re-pairs every encapsulated key with
its control slot and compares against the stored control shard.
"""

from __future__ import annotations

import enum
import hashlib
import threading
from collections.abc import Callable
from dataclasses import asdict, dataclass, field

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .bilinear import Element, RandomSource
from .errors import EpochError, ParameterError
from .protocol import (
    DIGEST_SIZE,
    EncapsulatedKey,
    EncryptedPayload,
    KeeperSecret,
    LedgerParams,
    MaskingShards,
    UnlockedKey,
    h,
    keeper_next_secret,
    keeper_update_encapsulated,
    provider_decrypt,
    reshard,
)

GENESIS_HASH = bytes(DIGEST_SIZE)
MAX_POW_DIFFICULTY = 32


class Variant(enum.Enum):
    FULL = "full"
    SHRUNK = "shrunk"


class WarrantyKind(enum.Enum):
    NONE = 0
    USER_SIGNATURE = 1
    PROOF_OF_WORK = 2
    THIRD_PARTY_SIGNATURE = 3


@dataclass(frozen=True)
class Warranty:
    kind: WarrantyKind
    payload: bytes = b""


@dataclass(frozen=True)
class ShardEntry:
    ciphertext: bytes
    digest: bytes
    index: int


@dataclass(frozen=True)
class DataBlock:
    index: int
    entries: tuple[ShardEntry, ...]
    control: Element
    prev_hash: bytes
    digest: bytes
    warranty: Warranty
    length: int
    owner: bytes = b""


@dataclass(frozen=True)
class ShrunkBlock:
    index: int
    payload_digest: bytes
    control: Element
    prev_hash: bytes
    digest: bytes
    warranty: Warranty
    length: int
    owner: bytes = b""
    locator: str = ""


Block = DataBlock | ShrunkBlock


@dataclass
class Chain:
    """Append-only list of blocks; indices run 1..len(blocks)."""

    params: LedgerParams
    variant: Variant = Variant.FULL
    pow_difficulty: int = 0
    blocks: list[Block] = field(default_factory=list)
    genesis_hash: bytes = GENESIS_HASH
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.pow_difficulty <= MAX_POW_DIFFICULTY:
            raise ParameterError(f"PoW difficulty must be in 0..{MAX_POW_DIFFICULTY}")

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, b: int) -> Block:
        """Block by its 1-based ledger index."""
        if not 1 <= b <= len(self.blocks):
            raise IndexError(f"no block {b} (chain has {len(self.blocks)})")
        return self.blocks[b - 1]

    def head_hash(self) -> bytes:
        return block_hash(self.blocks[-1]) if self.blocks else self.genesis_hash


@dataclass
class VariableState:
    epoch: int
    shards: MaskingShards
    keys: dict[int, EncapsulatedKey] = field(default_factory=dict)

    def __post_init__(self):
        if self.shards.epoch != self.epoch:
            raise EpochError("masking shards and state disagree on the epoch")


# ---------------------------------------------------------------------------
# digests
# ---------------------------------------------------------------------------


def _lp(*fields: bytes) -> bytes:
    # 4-byte big-endian length before each field keeps concatenation unambiguous
    return b"".join(len(f).to_bytes(4, "big") + f for f in fields)


def entries_digest(entries: tuple[ShardEntry, ...] | list[ShardEntry]) -> bytes:
    """``h(c_1 || h(m_1) || ... || c_n || h(m_n))``, the shrunk-block payload digest."""
    return h(_lp(*(x for e in entries for x in (e.ciphertext, e.digest))))


def block_digest(entries, control: Element, prev_hash: bytes) -> bytes:
    return h(_lp(*(x for e in entries for x in (e.ciphertext, e.digest)), bytes(control), prev_hash))


def shrunk_digest(payload_digest: bytes, control: Element, prev_hash: bytes) -> bytes:
    return h(_lp(payload_digest, bytes(control), prev_hash))


def block_hash(block: Block) -> bytes:
    """Hash of the whole block record; this is what the next block links to."""
    from .codec import encode_block

    return h(encode_block(block))


def control_index(b: int, shard_count: int) -> int:
    """Masking-shard slot paired with block ``b``; cycles through 1..I."""
    return (b - 1) % shard_count + 1


# ---------------------------------------------------------------------------
# warranties
# ---------------------------------------------------------------------------


def _pow_hash(digest: bytes, nonce: int) -> int:
    return int.from_bytes(hashlib.sha256(digest + nonce.to_bytes(8, "big")).digest(), "big")


def _check_difficulty(difficulty: int) -> None:
    if not 0 <= difficulty <= MAX_POW_DIFFICULTY:
        raise ParameterError(f"PoW difficulty must be in 0..{MAX_POW_DIFFICULTY}, got {difficulty}")


def verify_pow(digest: bytes, nonce: int, difficulty: int) -> bool:
    _check_difficulty(difficulty)
    return _pow_hash(digest, nonce) >> (256 - difficulty) == 0


def mine_pow(digest: bytes, difficulty: int) -> int:
    """Smallest nonce whose ``h(digest || nonce)`` has ``difficulty`` leading zero bits."""
    _check_difficulty(difficulty)
    nonce = 0
    while not verify_pow(digest, nonce, difficulty):
        nonce += 1
    return nonce


def public_key_bytes(key: Ed25519PrivateKey | Ed25519PublicKey) -> bytes:
    if isinstance(key, Ed25519PrivateKey):
        key = key.public_key()
    return key.public_bytes(Encoding.Raw, PublicFormat.Raw)


def sign_warranty(
    key: Ed25519PrivateKey, digest: bytes, kind: WarrantyKind = WarrantyKind.USER_SIGNATURE
) -> Warranty:
    if kind not in (WarrantyKind.USER_SIGNATURE, WarrantyKind.THIRD_PARTY_SIGNATURE):
        raise ParameterError(f"{kind.name} is not a signature warranty")
    return Warranty(kind, public_key_bytes(key) + key.sign(digest))


def verify_warranty(
    warranty: Warranty,
    digest: bytes,
    *,
    pow_difficulty: int = 0,
    trusted: set[bytes] | None = None,
) -> bool:
    """Check a warranty against the block digest it should cover.

    Signature warranties carry the signer's raw public key; when ``trusted`` is
    given the signer must also be one of those keys.
    """
    kind, payload = warranty.kind, warranty.payload
    if kind is WarrantyKind.NONE:
        return payload == b""
    if kind is WarrantyKind.PROOF_OF_WORK:
        return len(payload) == 8 and verify_pow(digest, int.from_bytes(payload, "big"), pow_difficulty)
    if len(payload) != 96:
        return False
    signer, signature = payload[:32], payload[32:]
    if trusted is not None and signer not in trusted:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(signer).verify(signature, digest)
    except (InvalidSignature, ValueError):
        return False
    return True


Warrant = Callable[[bytes], Warranty]


def no_warrant(digest: bytes) -> Warranty:
    return Warranty(WarrantyKind.NONE)


def pow_warrant(difficulty: int) -> Warrant:
    def warrant(digest: bytes) -> Warranty:
        return Warranty(WarrantyKind.PROOF_OF_WORK, mine_pow(digest, difficulty).to_bytes(8, "big"))

    return warrant


def signature_warrant(key: Ed25519PrivateKey, *, third_party: bool = False) -> Warrant:
    kind = WarrantyKind.THIRD_PARTY_SIGNATURE if third_party else WarrantyKind.USER_SIGNATURE
    return lambda digest: sign_warranty(key, digest, kind)


# ---------------------------------------------------------------------------
# building the ledger
# ---------------------------------------------------------------------------


def new_ledger(
    params: LedgerParams,
    shards: MaskingShards,
    *,
    variant: Variant = Variant.FULL,
    pow_difficulty: int = 0,
) -> tuple[Chain, VariableState]:
    return Chain(params, variant, pow_difficulty), VariableState(shards.epoch, shards)


def append_block(
    chain: Chain,
    state: VariableState,
    payload: EncryptedPayload,
    *,
    warrant: Warrant = no_warrant,
    owner: bytes = b"",
    locator: str | None = None,
) -> Block:
    """Write a user's encrypted payload as the next block.

    Computes the control shard from the current masking shards, seals the
    block digest with ``warrant`` and records the encapsulated key in
    ``state``. Both ``chain`` and ``state`` are updated in place.
    """
    params = chain.params
    if payload.epoch != state.epoch:
        raise EpochError(f"payload from epoch {payload.epoch}, ledger is at epoch {state.epoch}")
    n = len(payload.ciphertexts)
    if not 1 <= n <= params.shard_count:
        raise ParameterError(f"block must hold 1..{params.shard_count} shards, got {n}")
    with chain.lock:
        b = len(chain) + 1
        control = params.group.pair(state.shards[control_index(b, params.shard_count)], payload.k1)
        entries = payload_entries(payload)
        prev = chain.head_hash()
        if chain.variant is Variant.FULL:
            digest = block_digest(entries, control, prev)
            block: Block = DataBlock(b, entries, control, prev, digest, warrant(digest),
                                     payload.length, owner)
        else:
            d0 = entries_digest(entries)
            digest = shrunk_digest(d0, control, prev)
            block = ShrunkBlock(b, d0, control, prev, digest, warrant(digest), payload.length,
                                owner, locator if locator is not None else "sha256:" + d0.hex())
        chain.blocks.append(block)
        state.keys[b] = payload.encapsulated(b)
    return block


def payload_entries(payload: EncryptedPayload) -> tuple[ShardEntry, ...]:
    """Shard entries as they appear in a full block (or off-ledger, for a shrunk one)."""
    return tuple(
        ShardEntry(c, dg, i)
        for i, (c, dg) in enumerate(zip(payload.ciphertexts, payload.digests), start=1)
    )


def update_epoch(
    state: VariableState,
    secret: KeeperSecret,
    rng: RandomSource | None = None,
    *,
    time_key: int | None = None,
) -> tuple[VariableState, KeeperSecret]:
    """Advance shards and every encapsulated key to a fresh time-key at once.

    The previous keeper secret is erased; ``state`` itself is left untouched so
    concurrent auditors keep a consistent snapshot.
    """
    if secret.epoch != state.epoch:
        raise EpochError(f"keeper at epoch {secret.epoch}, state at epoch {state.epoch}")
    with secret.lock:
        new = keeper_next_secret(secret, rng, time_key=time_key)
        shards = reshard(secret, new, state.shards)
        keys = {b: keeper_update_encapsulated(secret, new, k) for b, k in state.keys.items()}
        secret.erase()
    return VariableState(new.epoch, shards, keys), new


def block_entries(chain: Chain, b: int, entries=None) -> tuple[ShardEntry, ...]:
    block = chain[b]
    if isinstance(block, DataBlock):
        return block.entries
    if entries is None:
        raise ParameterError(f"block {b} is shrunk; its payload must be fetched from {block.locator!r}")
    entries = tuple(entries)
    if entries_digest(entries) != block.payload_digest:
        raise ParameterError(f"payload for block {b} does not match its on-chain digest")
    return entries


def decrypt_block(
    chain: Chain,
    state: VariableState,
    b: int,
    key: UnlockedKey,
    entries=None,
) -> bytes:
    """Decrypt block ``b`` against the *current* masking shards.

    ``entries`` is required for shrunk blocks and is checked against the
    stored payload digest first.
    """
    es = block_entries(chain, b, entries)
    return provider_decrypt(
        chain.params.group,
        [e.ciphertext for e in es],
        state.shards,
        key,
        [e.digest for e in es],
        chain[b].length,
    )


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------


@dataclass
class AuditFailure:
    block: int
    stage: str
    detail: str = ""
    expected: str = ""
    actual: str = ""


@dataclass
class AuditReport:
    kind: str
    checked: int = 0
    failures: list[AuditFailure] = field(default_factory=list)
    results: dict[int, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def first_failure(self) -> AuditFailure | None:
        return self.failures[0] if self.failures else None

    @property
    def failed_blocks(self) -> set[int]:
        return {f.block for f in self.failures}

    def fail(self, block: int, stage: str, detail: str = "", expected=b"", actual=b"") -> None:
        self.failures.append(AuditFailure(
            block, stage, detail,
            expected.hex() if isinstance(expected, bytes) else str(expected),
            actual.hex() if isinstance(actual, bytes) else str(actual),
        ))
        if block > 0:
            self.results[block] = False

    def to_text(self) -> str:
        lines = [f"{self.kind}: {'PASS' if self.ok else 'FAIL'} ({self.checked} blocks checked)"]
        for f in self.failures:
            line = f"  block {f.block}: {f.stage}"
            if f.detail:
                line += f" - {f.detail}"
            lines.append(line)
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ok": self.ok,
            "checked": self.checked,
            "failures": [asdict(f) for f in self.failures],
        }


def audit_chain(chain: Chain, *, trusted: set[bytes] | None = None) -> AuditReport:
    """Recompute links, digests and warranties of every block. Never raises on
    bad data and never mutates the chain."""
    report = AuditReport("chain")
    params = chain.params
    with chain.lock:
        blocks = list(chain.blocks)
    expected_prev = chain.genesis_hash
    for pos, block in enumerate(blocks, start=1):
        report.checked += 1
        report.results[pos] = True
        if block.prev_hash != expected_prev:
            report.fail(pos, "link", "previous-block hash does not match", expected_prev, block.prev_hash)
        if block.index != pos:
            report.fail(pos, "index", f"block claims index {block.index}", str(pos), str(block.index))
        want_type = DataBlock if chain.variant is Variant.FULL else ShrunkBlock
        if not isinstance(block, want_type):
            report.fail(pos, "variant", f"{type(block).__name__} in a {chain.variant.value} chain")
        elif isinstance(block, DataBlock):
            _check_entries(report, pos, block, params)
            recomputed = block_digest(block.entries, block.control, block.prev_hash)
            if recomputed != block.digest:
                report.fail(pos, "digest", "block digest mismatch", recomputed, block.digest)
        else:
            recomputed = shrunk_digest(block.payload_digest, block.control, block.prev_hash)
            if recomputed != block.digest:
                report.fail(pos, "digest", "shrunk block digest mismatch", recomputed, block.digest)
        if not 1 <= block.length <= params.capacity:
            report.fail(pos, "structure", f"message length {block.length} out of range")
        if not verify_warranty(block.warranty, block.digest,
                               pow_difficulty=chain.pow_difficulty, trusted=trusted):
            report.fail(pos, "warranty", f"{block.warranty.kind.name} warranty does not verify")
        expected_prev = block_hash(block)
    return report


def _check_entries(report: AuditReport, pos: int, block: DataBlock, params: LedgerParams) -> None:
    n = len(block.entries)
    if not 1 <= n <= params.shard_count:
        report.fail(pos, "structure", f"{n} shards, expected 1..{params.shard_count}")
    for i, e in enumerate(block.entries, start=1):
        if e.index != i or len(e.ciphertext) != params.shard_width or len(e.digest) != DIGEST_SIZE:
            report.fail(pos, "structure", f"malformed shard entry {i}")
    if block.length > n * params.shard_width or block.length <= (n - 1) * params.shard_width:
        report.fail(pos, "structure", f"message length {block.length} inconsistent with {n} shards")


def audit_variable_state(chain: Chain, state: VariableState) -> AuditReport:
    """One pairing per block: ``pair(eps_ibar, k1) == c_b`` at the current epoch."""
    report = AuditReport("variable-state")
    params = chain.params
    group = params.group
    if len(state.shards) != params.shard_count:
        report.fail(0, "shards", f"{len(state.shards)} masking shards, expected {params.shard_count}")
        return report
    with chain.lock:
        blocks = list(chain.blocks)
    for pos, block in enumerate(blocks, start=1):
        report.checked += 1
        report.results[pos] = True
        key = state.keys.get(pos)
        if key is None:
            report.fail(pos, "missing-key", "no encapsulated key in the variable state")
            continue
        if key.epoch != state.epoch or key.block != pos:
            report.fail(pos, "epoch", f"key tagged block {key.block} epoch {key.epoch}")
            continue
        slot = control_index(pos, params.shard_count)
        control = group.pair(state.shards[slot], key.k1)
        if control != block.control:
            report.fail(pos, "control", f"control shard mismatch (slot {slot})",
                        bytes(block.control), bytes(control))
    for b in sorted(set(state.keys) - set(range(1, len(blocks) + 1))):
        report.fail(b, "orphan-key", "encapsulated key for a block not on the chain")
    return report


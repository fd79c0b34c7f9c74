"""Canonical binary encodings and the on-disk ledger store.

Every serialized object is wrapped in the same envelope::

    magic "UMSL" | version u8 | type tag u8 | body length u32 | body | sha256(body)

Bodies are sequences of fixed-width or length-prefixed fields, all integers
big-endian, group elements in their backend's canonical encoding. Each body
is built from named fields, so :func:`to_text` can print the same bytes as a
line-oriented hex listing for people to read.

A chain file is an append-only stream of envelopes: one header record and
then one record per block.
"""

from __future__ import annotations

import enum
import hashlib
import os
import tempfile
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, NoEncryption, PrivateFormat

from .bilinear import Backend, BilinearGroup, Element, GroupDescription, Kind, group_from_description
from .errors import DecodeError, ElementDecodeError, TruncationError, VersionError
from .ledger import (
    AuditReport,
    Block,
    Chain,
    DataBlock,
    ShardEntry,
    ShrunkBlock,
    VariableState,
    Variant,
    Warranty,
    WarrantyKind,
    audit_chain,
)
from .protocol import (
    DIGEST_SIZE,
    EncapsulatedKey,
    Handover,
    KeeperSecret,
    LedgerParams,
    MaskingShards,
    ProviderKeypair,
    SealedGrant,
    UserKeypair,
)

MAGIC = b"UMSL"
VERSION = 1
_HEADER = len(MAGIC) + 1 + 1 + 4


class Tag(enum.IntEnum):
    PARAMS = 1
    CHAIN_HEADER = 2
    FULL_BLOCK = 3
    SHRUNK_BLOCK = 4
    STATE = 5
    USER_PUBLIC = 6
    USER_SECRET = 7
    PROVIDER_PUBLIC = 8
    PROVIDER_SECRET = 9
    KEEPER_SECRET = 10
    GRANT = 11
    HANDOVER = 12
    SIGNING_KEY = 13
    VERIFY_KEY = 14
    PAYLOAD = 15


class ChecksumError(DecodeError):
    pass


# ---------------------------------------------------------------------------
# field writer / reader
# ---------------------------------------------------------------------------


class Writer:
    def __init__(self):
        self.fields: list[tuple[str, bytes]] = []

    def raw(self, name: str, data: bytes) -> Writer:
        self.fields.append((name, bytes(data)))
        return self

    def uint(self, name: str, value: int, width: int) -> Writer:
        return self.raw(name, value.to_bytes(width, "big"))

    def blob(self, name: str, data: bytes) -> Writer:
        self.uint(name + ".len", len(data), 4)
        return self.raw(name, data)

    def element(self, name: str, x: Element) -> Writer:
        return self.raw(name, bytes(x))

    def scalar(self, name: str, s: int, group: BilinearGroup) -> Writer:
        return self.uint(name, s, _scalar_width(group))

    def getvalue(self) -> bytes:
        return b"".join(data for _, data in self.fields)


class Reader:
    def __init__(self, data: bytes, base: int = 0):
        self.data = data
        self.pos = 0
        self.base = base

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncationError(self.base + self.pos, n, len(self.data) - self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def uint(self, width: int) -> int:
        return int.from_bytes(self.take(width), "big")

    def blob(self, limit: int = 1 << 24) -> bytes:
        n = self.uint(4)
        if n > limit:
            raise DecodeError(f"field length {n} at offset {self.base + self.pos - 4} exceeds {limit}")
        return self.take(n)

    def element(self, group: BilinearGroup, kind: Kind) -> Element:
        return group.decode(kind, self.take(group.description.width(kind)))

    def scalar(self, group: BilinearGroup, *, nonzero: bool = True) -> int:
        s = self.uint(_scalar_width(group))
        if s >= group.order or (nonzero and s == 0):
            raise ElementDecodeError(f"scalar out of range at offset {self.base + self.pos}")
        return s

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError(f"{len(self.data) - self.pos} trailing bytes at offset {self.base + self.pos}")


def _scalar_width(group: BilinearGroup) -> int:
    return (group.order.bit_length() + 7) // 8


def _wrap(tag: Tag, body: bytes) -> bytes:
    return MAGIC + bytes([VERSION, tag]) + len(body).to_bytes(4, "big") + body + hashlib.sha256(body).digest()


def _unwrap(data: bytes, offset: int = 0) -> tuple[Tag, bytes, int]:
    """Parse one envelope starting at ``offset``; returns (tag, body, next offset)."""
    r = Reader(data[offset:], base=offset)
    if r.take(len(MAGIC)) != MAGIC:
        raise VersionError(f"bad magic at offset {offset}")
    version = r.uint(1)
    if version != VERSION:
        raise VersionError(f"unsupported format version {version} at offset {offset}")
    raw_tag = r.uint(1)
    try:
        tag = Tag(raw_tag)
    except ValueError:
        raise VersionError(f"unknown type tag {raw_tag} at offset {offset + 5}") from None
    body = r.take(r.uint(4))
    if r.take(32) != hashlib.sha256(body).digest():
        raise ChecksumError(f"checksum mismatch in record at offset {offset}")
    return tag, body, offset + r.pos


def _expect(data: bytes, tag: Tag) -> Reader:
    got, body, end = _unwrap(data)
    if got is not tag:
        raise VersionError(f"expected a {tag.name} record, found {got.name}")
    if end != len(data):
        raise DecodeError(f"{len(data) - end} trailing bytes after {tag.name} record")
    return Reader(body, base=_HEADER)


def to_text(data: bytes, params: LedgerParams | None = None) -> str:
    """Human-readable listing of every record in ``data``.

    With ``params`` the bodies are split into named fields; without them,
    records that need the group (everything except PARAMS) are hex-dumped.
    """
    lines, offset = [], 0
    while offset < len(data):
        tag, body, offset = _unwrap(data, offset)
        lines.append(f"record {tag.name} v{VERSION} length={len(body)}")
        fields = _fields_for(tag, body, params)
        if fields is None:
            fields = [(f"body[{i}:{i + 32}]", body[i : i + 32]) for i in range(0, len(body), 32)]
        lines.extend(f"  {name}: {value.hex()}" for name, value in fields)
        lines.append(f"  checksum: {hashlib.sha256(body).hexdigest()}")
    return "\n".join(lines) + "\n"


def _fields_for(tag: Tag, body: bytes, params: LedgerParams | None):
    if tag is Tag.PARAMS:
        return _params_writer(decode_params(_wrap(tag, body))).fields
    if params is None:
        return None
    if tag in (Tag.FULL_BLOCK, Tag.SHRUNK_BLOCK):
        return _block_writer(_decode_block_body(tag, Reader(body), params)).fields
    if tag is Tag.STATE:
        return _state_writer(decode_state(_wrap(tag, body), params)).fields
    sw, g2 = _scalar_width(params.group), params.group.description.g2_bytes
    layout = {
        Tag.KEEPER_SECRET: [("epoch", 8), ("time_key", sw)],
        Tag.HANDOVER: [("epoch", 8), ("time_key", sw)],
        Tag.USER_SECRET: [("mu", sw), ("v", sw)],
        Tag.PROVIDER_SECRET: [("d", sw)],
        Tag.USER_PUBLIC: [("q", g2)],
        Tag.PROVIDER_PUBLIC: [("D", g2)],
        Tag.GRANT: [("block", 4), ("epoch", 8), ("ephemeral", g2), ("masked", g2)],
        Tag.SIGNING_KEY: [("ed25519", 32)],
        Tag.VERIFY_KEY: [("ed25519", 32)],
    }.get(tag)
    if layout is None or sum(n for _, n in layout) != len(body):
        return None
    fields, pos = [], 0
    for name, n in layout:
        fields.append((name, body[pos : pos + n]))
        pos += n
    return fields


# ---------------------------------------------------------------------------
# params
# ---------------------------------------------------------------------------

_BACKEND_CODE = {Backend.PRODUCTION: 0, Backend.TOY: 1}


def _params_writer(params: LedgerParams) -> Writer:
    group = params.group
    d = group.description
    order = d.order.to_bytes((d.order.bit_length() + 7) // 8, "big")
    return (
        Writer()
        .uint("backend", _BACKEND_CODE[d.backend], 1)
        .blob("order", order)
        .uint("g1_bytes", d.g1_bytes, 2)
        .uint("g2_bytes", d.g2_bytes, 2)
        .uint("gt_bytes", d.gt_bytes, 2)
        .element("g1", group.g1_base())
        .element("g2", group.g2_base())
        .uint("shard_count", params.shard_count, 4)
        .uint("block_bytes", params.block_bytes, 4)
        .blob("hash", params.hash_name.encode())
    )


def encode_params(params: LedgerParams) -> bytes:
    return _wrap(Tag.PARAMS, _params_writer(params).getvalue())


def decode_params(data: bytes) -> LedgerParams:
    r = _expect(data, Tag.PARAMS)
    code = r.uint(1)
    backend = {v: k for k, v in _BACKEND_CODE.items()}.get(code)
    if backend is None:
        raise VersionError(f"unknown backend code {code}")
    order = int.from_bytes(r.blob(limit=64), "big")
    desc = GroupDescription(backend, order, r.uint(2), r.uint(2), r.uint(2))
    try:
        group = group_from_description(desc)
    except Exception as exc:
        raise DecodeError(f"unusable group description: {exc}") from None
    if r.element(group, Kind.G1) != group.g1_base() or r.element(group, Kind.G2) != group.g2_base():
        raise ElementDecodeError("generators do not match the backend's standard generators")
    count, block_bytes = r.uint(4), r.uint(4)
    hash_name = r.blob(limit=32).decode("ascii", "replace")
    r.done()
    if hash_name != "sha256":
        raise DecodeError(f"unsupported hash {hash_name!r}")
    if count != -(-block_bytes // group.pad_width) or count == 0:
        raise DecodeError("shard count does not match block length")
    return LedgerParams(group, count, block_bytes, hash_name)


# ---------------------------------------------------------------------------
# blocks and chains
# ---------------------------------------------------------------------------


def _warranty(w: Writer, warranty: Warranty) -> None:
    w.uint("warranty.kind", warranty.kind.value, 1).blob("warranty.payload", warranty.payload)


def _block_writer(block: Block) -> Writer:
    w = Writer().uint("index", block.index, 4)
    if isinstance(block, DataBlock):
        w.uint("shards", len(block.entries), 2)
        for e in block.entries:
            w.uint(f"shard[{e.index}].index", e.index, 2)
            w.raw(f"shard[{e.index}].ciphertext", e.ciphertext)
            w.raw(f"shard[{e.index}].digest", e.digest)
    else:
        w.raw("payload_digest", block.payload_digest)
    w.element("control", block.control).raw("prev_hash", block.prev_hash).raw("digest", block.digest)
    _warranty(w, block.warranty)
    w.uint("length", block.length, 8).blob("owner", block.owner)
    if isinstance(block, ShrunkBlock):
        w.blob("locator", block.locator.encode())
    return w


def encode_block(block: Block) -> bytes:
    """Canonical record of one block (what the following block's back-link hashes)."""
    tag = Tag.FULL_BLOCK if isinstance(block, DataBlock) else Tag.SHRUNK_BLOCK
    return _wrap(tag, _block_writer(block).getvalue())


def _decode_block_body(tag: Tag, r: Reader, params: LedgerParams) -> Block:
    group = params.group
    index = r.uint(4)
    if tag is Tag.FULL_BLOCK:
        n = r.uint(2)
        if n > params.shard_count:
            raise DecodeError(f"block claims {n} shards, ledger allows {params.shard_count}")
        entries = tuple(
            ShardEntry(index=r.uint(2), ciphertext=r.take(params.shard_width), digest=r.take(DIGEST_SIZE))
            for _ in range(n)
        )
    else:
        payload_digest = r.take(DIGEST_SIZE)
    control = r.element(group, Kind.GT)
    prev_hash, digest = r.take(DIGEST_SIZE), r.take(DIGEST_SIZE)
    kind_code = r.uint(1)
    try:
        kind = WarrantyKind(kind_code)
    except ValueError:
        raise VersionError(f"unknown warranty kind {kind_code}") from None
    warranty = Warranty(kind, r.blob(limit=4096))
    length, owner = r.uint(8), r.blob(limit=4096)
    if tag is Tag.FULL_BLOCK:
        return DataBlock(index, entries, control, prev_hash, digest, warranty, length, owner)
    locator = r.blob(limit=4096)
    try:
        text = locator.decode("utf-8")
    except UnicodeDecodeError:
        raise DecodeError("payload locator is not valid UTF-8") from None
    return ShrunkBlock(index, payload_digest, control, prev_hash, digest, warranty, length, owner, text)


def decode_block(data: bytes, params: LedgerParams) -> Block:
    tag, body, end = _unwrap(data)
    if tag not in (Tag.FULL_BLOCK, Tag.SHRUNK_BLOCK):
        raise VersionError(f"expected a block record, found {tag.name}")
    if end != len(data):
        raise DecodeError(f"{len(data) - end} trailing bytes after block record")
    r = Reader(body, base=_HEADER)
    block = _decode_block_body(tag, r, params)
    r.done()
    return block


def encode_chain_header(chain: Chain) -> bytes:
    w = (
        Writer()
        .uint("variant", 0 if chain.variant is Variant.FULL else 1, 1)
        .uint("pow_difficulty", chain.pow_difficulty, 1)
        .raw("genesis_hash", chain.genesis_hash)
        .raw("params_hash", hashlib.sha256(encode_params(chain.params)).digest())
    )
    return _wrap(Tag.CHAIN_HEADER, w.getvalue())


def encode_chain(chain: Chain) -> bytes:
    with chain.lock:
        return encode_chain_header(chain) + b"".join(encode_block(b) for b in chain.blocks)


def decode_chain(data: bytes, params: LedgerParams) -> Chain:
    """Parse a chain file. Failures raise :class:`DecodeError` with a ``record``
    attribute: 0 for the header, ``b`` for the record of block ``b``."""
    record = 0
    try:
        tag, body, offset = _unwrap(data)
        if tag is not Tag.CHAIN_HEADER:
            raise VersionError(f"chain must start with a header record, found {tag.name}")
        r = Reader(body, base=_HEADER)
        variant_code, difficulty = r.uint(1), r.uint(1)
        if variant_code > 1:
            raise VersionError(f"unknown chain variant {variant_code}")
        genesis, params_hash = r.take(DIGEST_SIZE), r.take(DIGEST_SIZE)
        r.done()
        if params_hash != hashlib.sha256(encode_params(params)).digest():
            raise DecodeError("chain belongs to different ledger parameters")
        variant = Variant.FULL if variant_code == 0 else Variant.SHRUNK
        chain = Chain(params, variant, difficulty, genesis_hash=genesis)
        want = Tag.FULL_BLOCK if variant is Variant.FULL else Tag.SHRUNK_BLOCK
        while offset < len(data):
            record += 1
            start = offset
            tag, body, offset = _unwrap(data, offset)
            if tag is not want:
                raise VersionError(f"{tag.name} record in a {variant.value} chain")
            r = Reader(body, base=start + _HEADER)
            chain.blocks.append(_decode_block_body(tag, r, params))
            r.done()
    except DecodeError as exc:
        exc.record = record
        raise
    except Exception as exc:  # e.g. ParameterError from Chain for an out-of-range difficulty
        err = DecodeError(f"record {record}: {exc}")
        err.record = record
        raise err from None
    return chain


def audit_chain_bytes(data: bytes, params: LedgerParams, *, trusted: set[bytes] | None = None) -> AuditReport:
    """Audit a serialized chain; undecodable input is reported, not raised."""
    try:
        chain = decode_chain(data, params)
    except DecodeError as exc:
        report = AuditReport("chain")
        report.fail(getattr(exc, "record", 0), "decode", str(exc))
        return report
    return audit_chain(chain, trusted=trusted)


# ---------------------------------------------------------------------------
# variable state
# ---------------------------------------------------------------------------


def _state_writer(state: VariableState) -> Writer:
    w = Writer().uint("epoch", state.epoch, 8).uint("shards", len(state.shards), 4)
    for i, e in enumerate(state.shards.shards, start=1):
        w.element(f"shard[{i}]", e)
    w.uint("keys", len(state.keys), 4)
    for b in sorted(state.keys):
        k = state.keys[b]
        w.uint(f"key[{b}].block", k.block, 4).uint(f"key[{b}].epoch", k.epoch, 8).element(f"key[{b}].k1", k.k1)
    return w


def encode_state(state: VariableState) -> bytes:
    return _wrap(Tag.STATE, _state_writer(state).getvalue())


def decode_state(data: bytes, params: LedgerParams) -> VariableState:
    group = params.group
    r = _expect(data, Tag.STATE)
    epoch, n = r.uint(8), r.uint(4)
    if n != params.shard_count:
        raise DecodeError(f"state has {n} masking shards, ledger expects {params.shard_count}")
    shards = MaskingShards(epoch, tuple(r.element(group, Kind.G1) for _ in range(n)))
    keys: dict[int, EncapsulatedKey] = {}
    last = 0
    for _ in range(r.uint(4)):
        b, key_epoch = r.uint(4), r.uint(8)
        if b <= last:
            raise DecodeError("encapsulated keys are not in strictly increasing block order")
        keys[b] = EncapsulatedKey(b, key_epoch, r.element(group, Kind.G2))
        last = b
    r.done()
    return VariableState(epoch, shards, keys)


# ---------------------------------------------------------------------------
# keys, grants, handovers
# ---------------------------------------------------------------------------


def encode_user_public(group: BilinearGroup, q: Element) -> bytes:
    return _wrap(Tag.USER_PUBLIC, Writer().element("q", q).getvalue())


def decode_user_public(data: bytes, group: BilinearGroup) -> Element:
    r = _expect(data, Tag.USER_PUBLIC)
    q = r.element(group, Kind.G2)
    r.done()
    return q


def encode_user_secret(group: BilinearGroup, kp: UserKeypair) -> bytes:
    w = Writer().scalar("mu", kp.mu, group).scalar("v", kp.v, group)
    return _wrap(Tag.USER_SECRET, w.getvalue())


def decode_user_secret(data: bytes, group: BilinearGroup) -> UserKeypair:
    r = _expect(data, Tag.USER_SECRET)
    mu, v = r.scalar(group), r.scalar(group)
    r.done()
    return UserKeypair(mu, v, group.g2_base() ** mu)


def encode_provider_public(group: BilinearGroup, public: Element) -> bytes:
    return _wrap(Tag.PROVIDER_PUBLIC, Writer().element("D", public).getvalue())


def decode_provider_public(data: bytes, group: BilinearGroup) -> Element:
    r = _expect(data, Tag.PROVIDER_PUBLIC)
    d = r.element(group, Kind.G2)
    r.done()
    return d


def encode_provider_secret(group: BilinearGroup, kp: ProviderKeypair) -> bytes:
    return _wrap(Tag.PROVIDER_SECRET, Writer().scalar("d", kp.d, group).getvalue())


def decode_provider_secret(data: bytes, group: BilinearGroup) -> ProviderKeypair:
    r = _expect(data, Tag.PROVIDER_SECRET)
    d = r.scalar(group)
    r.done()
    return ProviderKeypair(d, group.g2_base() ** d)


def encode_keeper_secret(secret: KeeperSecret) -> bytes:
    w = Writer().uint("epoch", secret.epoch, 8).scalar("time_key", secret.time_key, secret.group)
    return _wrap(Tag.KEEPER_SECRET, w.getvalue())


def decode_keeper_secret(data: bytes, group: BilinearGroup) -> KeeperSecret:
    r = _expect(data, Tag.KEEPER_SECRET)
    epoch, s = r.uint(8), r.scalar(group)
    r.done()
    return KeeperSecret(group, epoch, s)


def encode_handover(group: BilinearGroup, record: Handover) -> bytes:
    w = Writer().uint("epoch", record.epoch, 8).scalar("time_key", record.time_key, group)
    return _wrap(Tag.HANDOVER, w.getvalue())


def decode_handover(data: bytes, group: BilinearGroup) -> Handover:
    r = _expect(data, Tag.HANDOVER)
    record = Handover(r.uint(8), r.scalar(group))
    r.done()
    return record


def encode_grant(grant: SealedGrant) -> bytes:
    w = (
        Writer()
        .uint("block", grant.block, 4)
        .uint("epoch", grant.epoch, 8)
        .element("ephemeral", grant.ephemeral)
        .element("masked", grant.masked)
    )
    return _wrap(Tag.GRANT, w.getvalue())


def decode_grant(data: bytes, group: BilinearGroup) -> SealedGrant:
    r = _expect(data, Tag.GRANT)
    grant = SealedGrant(r.uint(4), r.uint(8), r.element(group, Kind.G2), r.element(group, Kind.G2))
    r.done()
    return grant


def encode_signing_key(key: Ed25519PrivateKey) -> bytes:
    raw = key.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())
    return _wrap(Tag.SIGNING_KEY, Writer().raw("ed25519", raw).getvalue())


def decode_signing_key(data: bytes) -> Ed25519PrivateKey:
    r = _expect(data, Tag.SIGNING_KEY)
    key = Ed25519PrivateKey.from_private_bytes(r.take(32))
    r.done()
    return key


def encode_verify_key(raw: bytes) -> bytes:
    return _wrap(Tag.VERIFY_KEY, Writer().raw("ed25519", raw).getvalue())


def decode_verify_key(data: bytes) -> bytes:
    r = _expect(data, Tag.VERIFY_KEY)
    raw = r.take(32)
    r.done()
    try:
        Ed25519PublicKey.from_public_bytes(raw)
    except ValueError:
        raise ElementDecodeError("invalid Ed25519 public key") from None
    return raw


def encode_payload(entries: tuple[ShardEntry, ...]) -> bytes:
    w = Writer().uint("shards", len(entries), 2)
    for e in entries:
        w.uint(f"shard[{e.index}].index", e.index, 2).blob(f"shard[{e.index}].ciphertext", e.ciphertext)
        w.raw(f"shard[{e.index}].digest", e.digest)
    return _wrap(Tag.PAYLOAD, w.getvalue())


def decode_payload(data: bytes) -> tuple[ShardEntry, ...]:
    r = _expect(data, Tag.PAYLOAD)
    entries = tuple(
        ShardEntry(index=r.uint(2), ciphertext=r.blob(), digest=r.take(DIGEST_SIZE))
        for _ in range(r.uint(2))
    )
    r.done()
    return entries


# ---------------------------------------------------------------------------
# on-disk store
# ---------------------------------------------------------------------------


def atomic_write(path: Path, data: bytes) -> None:
    """Write to a temporary sibling and rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


@dataclass
class LedgerStore:
    """File layout of one ledger::

        <root>/params  <root>/chain  <root>/state
        <root>/keys/<name>.pub       public material
        <root>/secrets/<name>.key    secrets, written only through explicit calls
    """

    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    @property
    def params_path(self) -> Path:
        return self.root / "params"

    @property
    def chain_path(self) -> Path:
        return self.root / "chain"

    @property
    def state_path(self) -> Path:
        return self.root / "state"

    def key_path(self, name: str) -> Path:
        return self.root / "keys" / f"{name}.pub"

    def secret_path(self, name: str) -> Path:
        return self.root / "secrets" / f"{name}.key"

    def payload_path(self, locator: str) -> Path:
        return self.root / "payloads" / locator.replace(":", "-").replace("/", "_")

    def exists(self) -> bool:
        return self.params_path.exists()

    @contextmanager
    def locked(self) -> Iterator[None]:
        """Advisory exclusive lock on the ledger directory."""
        import fcntl

        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.root / ".lock", "a+b") as f:
            fcntl.flock(f, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(f, fcntl.LOCK_UN)

    def create(self, params: LedgerParams, chain: Chain, state: VariableState) -> None:
        atomic_write(self.params_path, encode_params(params))
        atomic_write(self.chain_path, encode_chain(chain))
        atomic_write(self.state_path, encode_state(state))
        (self.root / "keys").mkdir(exist_ok=True)
        secrets_dir = self.root / "secrets"
        secrets_dir.mkdir(exist_ok=True)
        os.chmod(secrets_dir, 0o700)

    def load_params(self) -> LedgerParams:
        return decode_params(self.params_path.read_bytes())

    def load_chain(self, params: LedgerParams) -> Chain:
        return decode_chain(self.chain_path.read_bytes(), params)

    def load_state(self, params: LedgerParams) -> VariableState:
        return decode_state(self.state_path.read_bytes(), params)

    def append_block(self, block: Block) -> None:
        """Blocks are only ever appended to the chain file."""
        with open(self.chain_path, "ab") as f:
            f.write(encode_block(block))
            f.flush()
            os.fsync(f.fileno())

    def save_state(self, state: VariableState) -> None:
        atomic_write(self.state_path, encode_state(state))

    def write_public(self, name: str, data: bytes) -> None:
        atomic_write(self.key_path(name), data)

    def read_public(self, name: str) -> bytes:
        return self.key_path(name).read_bytes()

    def write_secret(self, name: str, data: bytes) -> None:
        path = self.secret_path(name)
        atomic_write(path, data)
        os.chmod(path, 0o600)

    def read_secret(self, name: str) -> bytes:
        return self.secret_path(name).read_bytes()

    def erase_secret(self, name: str) -> None:
        self.secret_path(name).unlink()

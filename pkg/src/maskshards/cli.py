"""Scenario driver: run the protocol against an on-disk ledger.

    maskshards init --ledger L --backend toy --block-bytes 16 --seed 01
    maskshards keygen --ledger L --role user --name alice
    maskshards keygen --ledger L --role provider --name acme
    maskshards publish --ledger L --user alice report.pdf
    maskshards grant --ledger L --user alice --block 1 --provider acme --out g.grant
    maskshards decrypt --ledger L --provider acme --block 1 --grant g.grant --out out.pdf
    maskshards update --ledger L
    maskshards audit --ledger L --json
    maskshards rotate-keeper --ledger L

Exit status: 0 success, 2 usage, 3 missing/duplicate ledger objects,
4 audit failure, 5 digest mismatch on decryption, 6 undecodable file,
7 epoch or keeper-state error, 8 bad parameters, 1 anything else.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
from pathlib import Path

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from . import codec
from .bilinear import BilinearGroup, ToyGroup, production_group
from .errors import DecodeError, EpochError, IntegrityError, KeeperStateError, ParameterError
from .ledger import (
    Variant,
    WarrantyKind,
    append_block,
    audit_variable_state,
    block_entries,
    new_ledger,
    no_warrant,
    payload_entries,
    pow_warrant,
    public_key_bytes,
    signature_warrant,
    update_epoch,
)
from .protocol import (
    keeper_adopt,
    keeper_issue_token,
    keeper_rotate,
    keeper_setup,
    provider_decrypt,
    provider_keygen,
    provider_open_grant,
    user_encrypt,
    user_keygen,
    user_seal_grant,
    user_unlock,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_LOOKUP = 3
EXIT_AUDIT = 4
EXIT_INTEGRITY = 5
EXIT_DECODE = 6
EXIT_STATE = 7
EXIT_PARAMS = 8

KEEPER = "keeper"
NOTARY = "notary"
WARRANTIES = {"sig": WarrantyKind.USER_SIGNATURE, "pow": WarrantyKind.PROOF_OF_WORK,
              "third-party": WarrantyKind.THIRD_PARTY_SIGNATURE, "none": WarrantyKind.NONE}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_LOOKUP):
        super().__init__(message)
        self.code = code


class Context:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.store = codec.LedgerStore(Path(args.ledger))
        self._params = None

    @property
    def params(self):
        if self._params is None:
            if not self.store.exists():
                raise CliError(f"no ledger at {self.store.root}")
            self._params = self.store.load_params()
        return self._params

    @property
    def group(self) -> BilinearGroup:
        return self.params.group

    @property
    def config(self) -> dict:
        return json.loads((self.store.root / "config.json").read_text())

    def save_config(self, config: dict) -> None:
        codec.atomic_write(self.store.root / "config.json",
                           (json.dumps(config, indent=2, sort_keys=True) + "\n").encode())

    def rng(self, *label: object) -> random.Random | None:
        """Deterministic generator in seeded (toy-only) mode, else None (system randomness)."""
        if self.args.seed is None:
            return None
        if self.store.exists() and not isinstance(self.group, ToyGroup):
            raise CliError("--seed is only permitted with the toy backend", EXIT_PARAMS)
        material = "|".join([self.args.seed, *map(str, label)]).encode()
        return random.Random(hashlib.sha256(material).digest())

    def signing_key(self, rng: random.Random | None) -> Ed25519PrivateKey:
        if rng is None:
            return Ed25519PrivateKey.generate()
        return Ed25519PrivateKey.from_private_bytes(rng.getrandbits(256).to_bytes(32, "big"))

    def role_of(self, name: str) -> codec.Tag | None:
        path = self.store.key_path(name)
        if not path.exists():
            return None
        tag, _, _ = codec._unwrap(path.read_bytes())
        return tag

    def require(self, name: str, tag: codec.Tag, role: str) -> None:
        if self.role_of(name) is not tag:
            raise CliError(f"no {role} named {name!r} in {self.store.root}")

    def emit(self, record: dict, text: str) -> None:
        if self.args.json:
            print(json.dumps(record, sort_keys=True))
        else:
            print(text)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_init(ctx: Context) -> int:
    args = ctx.args
    store = ctx.store
    if store.exists() or (store.root / "chain").exists():
        raise CliError(f"a ledger already exists at {store.root}")
    if args.backend == "toy":
        group: BilinearGroup = ToyGroup(args.toy_order)
    else:
        if args.seed is not None:
            raise CliError("--seed is only permitted with the toy backend", EXIT_PARAMS)
        group = production_group()
    block_bytes = args.block_bytes if args.block_bytes is not None else 4 * group.pad_width
    rng = ctx.rng("init")
    params, shards, secret = keeper_setup(group, block_bytes, rng)
    variant = Variant(args.variant)
    chain, state = new_ledger(params, shards, variant=variant, pow_difficulty=args.pow_difficulty)
    with store.locked():
        store.create(params, chain, state)
        store.write_secret(KEEPER, codec.encode_keeper_secret(secret))
        notary = ctx.signing_key(rng)
        store.write_secret(NOTARY, codec.encode_signing_key(notary))
        store.write_public(NOTARY, codec.encode_verify_key(public_key_bytes(notary)))
        ctx.save_config({"warranty": args.warranty, "keeper_generation": 0})
    d = group.description
    ctx.emit(
        {"backend": d.backend.value, "order_bits": d.order.bit_length(), "shard_count": params.shard_count,
         "shard_width": params.shard_width, "block_bytes": block_bytes, "variant": variant.value,
         "warranty": args.warranty, "pow_difficulty": args.pow_difficulty},
        f"initialized {variant.value} ledger at {store.root}\n"
        f"  backend {d.backend.value}, |p| = {d.order.bit_length()} bits\n"
        f"  I = {params.shard_count} shards of {params.shard_width} bytes (|B| = {block_bytes})\n"
        f"  warranty {args.warranty}, PoW difficulty {args.pow_difficulty}",
    )
    return EXIT_OK


def cmd_keygen(ctx: Context) -> int:
    args, store, group = ctx.args, ctx.store, ctx.group
    name = args.name
    if name in (KEEPER, NOTARY) or "/" in name or name.startswith("."):
        raise CliError(f"invalid identity name {name!r}", EXIT_PARAMS)
    if ctx.role_of(name) is not None:
        raise CliError(f"identity {name!r} already exists")
    rng = ctx.rng("keygen", args.role, name)
    with store.locked():
        if args.role == "user":
            kp = user_keygen(group, rng)
            sign = ctx.signing_key(rng)
            store.write_secret(name, codec.encode_user_secret(group, kp))
            store.write_secret(f"{name}.sign", codec.encode_signing_key(sign))
            store.write_public(f"{name}.verify", codec.encode_verify_key(public_key_bytes(sign)))
            store.write_public(name, codec.encode_user_public(group, kp.q))
            public = kp.q
        else:
            kp = provider_keygen(group, rng)
            store.write_secret(name, codec.encode_provider_secret(group, kp))
            store.write_public(name, codec.encode_provider_public(group, kp.public))
            public = kp.public
    ctx.emit({"role": args.role, "name": name, "public": public.hex()},
             f"{args.role} {name}: public key {public.hex()[:32]}...")
    return EXIT_OK


def _keeper(ctx: Context):
    path = ctx.store.secret_path(KEEPER)
    if not path.exists():
        raise CliError("the file keeper secret is missing (retired keeper?)", EXIT_STATE)
    return codec.decode_keeper_secret(path.read_bytes(), ctx.group)


def cmd_publish(ctx: Context) -> int:
    args, store, params, group = ctx.args, ctx.store, ctx.params, ctx.group
    ctx.require(args.user, codec.Tag.USER_PUBLIC, "user")
    message = Path(args.file).read_bytes()
    warranty = args.warranty or ctx.config["warranty"]
    with store.locked():
        chain = store.load_chain(params)
        state = store.load_state(params)
        secret = _keeper(ctx)
        if secret.epoch != state.epoch:
            raise CliError(f"keeper at epoch {secret.epoch}, ledger state at {state.epoch}", EXIT_STATE)
        rng = ctx.rng("publish", len(chain), state.epoch, args.user)
        keypair = codec.decode_user_secret(store.read_secret(args.user), group)
        token = keeper_issue_token(secret, keypair.q)
        payload = user_encrypt(params, keypair, token, state.shards, message, rng)
        owner = b""
        if WARRANTIES[warranty] is WarrantyKind.USER_SIGNATURE:
            warrant = signature_warrant(codec.decode_signing_key(store.read_secret(f"{args.user}.sign")))
            owner = hashlib.sha256(bytes(keypair.q)).digest()[:16]
        elif WARRANTIES[warranty] is WarrantyKind.THIRD_PARTY_SIGNATURE:
            warrant = signature_warrant(codec.decode_signing_key(store.read_secret(NOTARY)), third_party=True)
        elif WARRANTIES[warranty] is WarrantyKind.PROOF_OF_WORK:
            warrant = pow_warrant(chain.pow_difficulty)
        else:
            warrant = no_warrant
        block = append_block(chain, state, payload, warrant=warrant, owner=owner)
        if chain.variant is Variant.SHRUNK:
            codec.atomic_write(store.payload_path(block.locator), codec.encode_payload(payload_entries(payload)))
        store.append_block(block)
        store.save_state(state)
    ctx.emit({"block": block.index, "shards": len(payload.ciphertexts), "epoch": state.epoch,
              "digest": block.digest.hex()},
             f"published {len(message)} bytes as block {block.index} "
             f"({len(payload.ciphertexts)} shards, epoch {state.epoch})")
    return EXIT_OK


def cmd_update(ctx: Context) -> int:
    store, params = ctx.store, ctx.params
    with store.locked():
        state = store.load_state(params)
        secret = _keeper(ctx)
        state, secret = update_epoch(state, secret, ctx.rng("update", state.epoch))
        store.save_state(state)
        store.write_secret(KEEPER, codec.encode_keeper_secret(secret))
    ctx.emit({"epoch": state.epoch, "keys": len(state.keys)},
             f"advanced to epoch {state.epoch}; {len(state.keys)} encapsulated key(s) re-keyed")
    return EXIT_OK


def _block_or_fail(chain, b: int):
    if not 1 <= b <= len(chain):
        raise CliError(f"no block {b} on the chain ({len(chain)} blocks)")
    return chain[b]


def cmd_grant(ctx: Context) -> int:
    args, store, params, group = ctx.args, ctx.store, ctx.params, ctx.group
    ctx.require(args.user, codec.Tag.USER_PUBLIC, "user")
    ctx.require(args.provider, codec.Tag.PROVIDER_PUBLIC, "provider")
    chain = store.load_chain(params)
    _block_or_fail(chain, args.block)
    state = store.load_state(params)
    key = state.keys.get(args.block)
    if key is None:
        raise CliError(f"no encapsulated key for block {args.block} in the variable state")
    keypair = codec.decode_user_secret(store.read_secret(args.user), group)
    provider_public = codec.decode_provider_public(store.read_public(args.provider), group)
    unlocked = user_unlock(group, keypair, key)
    grant = user_seal_grant(group, unlocked, provider_public,
                            ctx.rng("grant", args.block, state.epoch, args.provider))
    out = Path(args.out) if args.out else store.root / "grants" / f"block{args.block}-{args.provider}-e{state.epoch}.grant"
    codec.atomic_write(out, codec.encode_grant(grant))
    ctx.emit({"block": args.block, "epoch": state.epoch, "grant": str(out)},
             f"grant for block {args.block} (epoch {state.epoch}) written to {out}")
    return EXIT_OK


def cmd_decrypt(ctx: Context) -> int:
    args, store, params, group = ctx.args, ctx.store, ctx.params, ctx.group
    ctx.require(args.provider, codec.Tag.PROVIDER_PUBLIC, "provider")
    chain = store.load_chain(params)
    block = _block_or_fail(chain, args.block)
    state = store.load_state(params)
    grant = codec.decode_grant(Path(args.grant).read_bytes(), group)
    if grant.block != args.block:
        raise CliError(f"grant is for block {grant.block}, not {args.block}", EXIT_PARAMS)
    if grant.epoch != state.epoch:
        _warn(f"grant was issued at epoch {grant.epoch}, ledger is at epoch {state.epoch}; "
              "it has most likely been revoked")
    provider = codec.decode_provider_secret(store.read_secret(args.provider), group)
    unlocked = provider_open_grant(grant, provider.d)
    payload = None
    if chain.variant is Variant.SHRUNK:
        payload = codec.decode_payload(store.payload_path(block.locator).read_bytes())
    entries = block_entries(chain, args.block, payload)
    message = provider_decrypt(group, [e.ciphertext for e in entries], state.shards, unlocked,
                               [e.digest for e in entries], block.length)
    codec.atomic_write(Path(args.out), message)
    ctx.emit({"block": args.block, "bytes": len(message), "out": args.out},
             f"decrypted block {args.block}: {len(message)} bytes written to {args.out}")
    return EXIT_OK


def cmd_audit(ctx: Context) -> int:
    store, params = ctx.store, ctx.params
    trusted = {
        codec.decode_verify_key(p.read_bytes())
        for p in (store.root / "keys").glob("*.pub")
        if codec._unwrap(p.read_bytes())[0] is codec.Tag.VERIFY_KEY
    }
    chain_report = codec.audit_chain_bytes(store.chain_path.read_bytes(), params, trusted=trusted)
    state_report = None
    if chain_report.ok:
        state_report = audit_variable_state(store.load_chain(params), store.load_state(params))
    reports = [r for r in (chain_report, state_report) if r is not None]
    ok = all(r.ok for r in reports)
    if ctx.args.json:
        print(json.dumps({"ok": ok, "reports": [r.to_dict() for r in reports]}, sort_keys=True))
    else:
        print("\n".join(r.to_text() for r in reports))
        if state_report is None:
            print("variable-state: SKIPPED (chain did not pass)")
    return EXIT_OK if ok else EXIT_AUDIT


def cmd_rotate_keeper(ctx: Context) -> int:
    store, group = ctx.store, ctx.group
    with store.locked():
        retiring = _keeper(ctx)
        handover_name = "handover"

        def send(record):
            store.write_secret(handover_name, codec.encode_handover(group, record))

        keeper_rotate(retiring, send)
        store.erase_secret(KEEPER)
        # successor side: receive over the channel, then discard the transport copy
        record = codec.decode_handover(store.read_secret(handover_name), group)
        successor = keeper_adopt(group, record)
        store.erase_secret(handover_name)
        store.write_secret(KEEPER, codec.encode_keeper_secret(successor))
        config = ctx.config
        config["keeper_generation"] = config.get("keeper_generation", 0) + 1
        ctx.save_config(config)
    ctx.emit({"epoch": successor.epoch, "generation": config["keeper_generation"]},
             f"keeper rotated at epoch {successor.epoch}; generation {config['keeper_generation']} now active")
    return EXIT_OK


def cmd_export_secret(ctx: Context) -> int:
    store, params = ctx.store, ctx.params
    path = store.secret_path(ctx.args.name)
    if not path.exists():
        raise CliError(f"no secret named {ctx.args.name!r}")
    sys.stdout.write(codec.to_text(path.read_bytes(), params))
    return EXIT_OK


COMMANDS = {
    "init": cmd_init,
    "keygen": cmd_keygen,
    "publish": cmd_publish,
    "update": cmd_update,
    "grant": cmd_grant,
    "decrypt": cmd_decrypt,
    "audit": cmd_audit,
    "rotate-keeper": cmd_rotate_keeper,
    "export-secret": cmd_export_secret,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ledger", default="ledger", metavar="DIR", help="ledger directory")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--seed", metavar="HEX", type=_hex, help="deterministic randomness (toy backend only)")

    parser = argparse.ArgumentParser(prog="maskshards", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", parents=[common], help="create a ledger with epoch-0 masking shards")
    p.add_argument("--backend", choices=["production", "toy"], default="production")
    p.add_argument("--toy-order", type=int, default=101, metavar="P", help="prime order of the toy group")
    p.add_argument("--block-bytes", type=int, metavar="N", help="data block length |B| (default 4 shards)")
    p.add_argument("--warranty", choices=list(WARRANTIES), default="sig")
    p.add_argument("--pow-difficulty", type=int, default=8, metavar="N")
    p.add_argument("--variant", choices=["full", "shrunk"], default="full")

    p = sub.add_parser("keygen", parents=[common], help="create a user or provider identity")
    p.add_argument("--role", choices=["user", "provider"], required=True)
    p.add_argument("--name", required=True)

    p = sub.add_parser("publish", parents=[common], help="encrypt a file into the next block")
    p.add_argument("--user", required=True)
    p.add_argument("--warranty", choices=list(WARRANTIES), help="override the ledger default")
    p.add_argument("file")

    sub.add_parser("update", parents=[common], help="re-key shards and encapsulated keys")

    p = sub.add_parser("grant", parents=[common], help="unlock a block for a provider")
    p.add_argument("--user", required=True)
    p.add_argument("--block", type=int, required=True)
    p.add_argument("--provider", required=True)
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("decrypt", parents=[common], help="decrypt a block with a sealed grant")
    p.add_argument("--provider", required=True)
    p.add_argument("--block", type=int, required=True)
    p.add_argument("--grant", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="PATH")

    sub.add_parser("audit", parents=[common], help="check the hash chain and every control shard")
    sub.add_parser("rotate-keeper", parents=[common], help="hand the time-key to a fresh keeper")

    p = sub.add_parser("export-secret", parents=[common], help="print a stored secret")
    p.add_argument("--name", required=True, help="identity name, 'keeper' or 'notary'")
    return parser


def _hex(value: str) -> str:
    try:
        bytes.fromhex(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a hex string: {value!r}") from None
    return value.lower()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](Context(args))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except IntegrityError as exc:
        print(f"error: {exc}; the grant is stale, revoked or for another key", file=sys.stderr)
        return EXIT_INTEGRITY
    except DecodeError as exc:
        print(f"error: cannot decode ledger data: {exc}", file=sys.stderr)
        return EXIT_DECODE
    except (EpochError, KeeperStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATE
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except FileNotFoundError as exc:
        print(f"error: missing file {exc.filename}", file=sys.stderr)
        return EXIT_LOOKUP


if __name__ == "__main__":
    sys.exit(main())

"""Fixed-seed toy scenario whose ledger files are pinned under tests/golden/.

Regenerate after an intentional format change with::

    python3 tests/golden_scenario.py
"""

from __future__ import annotations

import contextlib
import io
import sys
import tempfile
from pathlib import Path

from maskshards.cli import main

GOLDEN_DIR = Path(__file__).parent / "golden"
SEED = "5eed"
FILES = ("params", "chain", "state", "grant")
MESSAGES = [b"first block", b"second", b"third block of data"]


def run(root: Path) -> dict[str, bytes]:
    """Drive the CLI through init, publish x3, update, grant; return the ledger files."""
    ledger = str(root / "ledger")

    def cli(*argv: str) -> None:
        with contextlib.redirect_stdout(io.StringIO()):
            code = main([*argv, "--ledger", ledger, "--seed", SEED])
        if code != 0:
            raise RuntimeError(f"{argv[0]} exited with {code}")

    cli("init", "--backend", "toy", "--block-bytes", "24", "--warranty", "sig")
    cli("keygen", "--role", "user", "--name", "alice")
    cli("keygen", "--role", "provider", "--name", "acme")
    for i, message in enumerate(MESSAGES):
        path = root / f"m{i}"
        path.write_bytes(message)
        cli("publish", "--user", "alice", str(path))
    cli("update")
    grant = root / "g.grant"
    cli("grant", "--user", "alice", "--block", "2", "--provider", "acme", "--out", str(grant))
    out = {name: (root / "ledger" / name).read_bytes() for name in FILES[:3]}
    out["grant"] = grant.read_bytes()
    return out


def regenerate() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        files = run(Path(tmp))
    GOLDEN_DIR.mkdir(exist_ok=True)
    for name, data in files.items():
        (GOLDEN_DIR / f"{name}.bin").write_bytes(data)
        print(f"wrote {GOLDEN_DIR / name}.bin ({len(data)} bytes)", file=sys.stderr)


if __name__ == "__main__":
    regenerate()

"""Acceptance suite: one or more tests per criterion, each tagged with
``@pytest.mark.criterion``. The terminal summary prints one PASS/FAIL line per
criterion (see conftest.py)."""

import dataclasses
import random
import tempfile
import time
from pathlib import Path

import pytest
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from maskshards import codec
from maskshards.bilinear import ToyGroup
from maskshards.errors import IntegrityError, KeeperStateError
from maskshards.ledger import (
    EncapsulatedKey,
    Variant,
    audit_chain,
    audit_variable_state,
    decrypt_block,
    payload_entries,
    public_key_bytes,
    signature_warrant,
    update_epoch,
)
from maskshards.protocol import (
    keeper_adopt,
    keeper_issue_token,
    keeper_rotate,
    keeper_setup,
    keeper_update_encapsulated,
    keeper_update_shards,
    provider_keygen,
    provider_open_grant,
    user_encrypt,
    user_keygen,
    user_seal_grant,
    user_unlock,
)

from golden_scenario import FILES, GOLDEN_DIR, run
from helpers import build
from oracles import dlog, primes_upto, toy_value


def _grant_and_open(group, sc, b, provider, rng):
    unlocked = user_unlock(group, sc.owners[b], sc.state.keys[b])
    grant = user_seal_grant(group, unlocked, provider.public, rng)
    return provider_open_grant(grant, provider.d)


def _entries(sc, b):
    return payload_entries(sc.payloads[b]) if sc.chain.variant is Variant.SHRUNK else None


# --------------------------------------------------------------------------- 1


@pytest.mark.criterion(1, "round-trip on the production backend")
def test_round_trip(bls):
    start = time.perf_counter()
    rng = random.Random(2024)
    provider = provider_keygen(bls, rng)
    trials = 0
    for shards in (1, 4, 16):
        sc = build(bls, shards=shards, seed=shards)
        capacity = shards * bls.pad_width
        lengths = [1, capacity] + [rng.randint(1, capacity) for _ in range(32)]
        for n in lengths:
            message = rng.randbytes(n)
            block = sc.publish(message, user=trials % 2)
            key = _grant_and_open(bls, sc, block.index, provider, rng)
            assert decrypt_block(sc.chain, sc.state, block.index, key) == message
            trials += 1
    elapsed = time.perf_counter() - start
    print(f"criterion 1: {trials} round-trips in {elapsed:.2f}s")
    assert trials >= 100
    assert elapsed < 60


# ----------------------------------------------------------------------- 2 + 3


@pytest.fixture(scope="module")
def revocation_runs(bls):
    """25 ledgers x 4 blocks = 100 trials; each block is granted at some epoch j
    and then followed through five updates."""
    failures_after: dict[int, list[list[bool]]] = {1: [], 2: [], 5: []}
    regrants: list[bool] = []
    rng = random.Random(77)
    provider = provider_keygen(bls, rng)
    for run_id in range(25):
        sc = build(bls, shards=4, seed=1000 + run_id)
        for _ in range(rng.randrange(3)):  # vary the starting epoch j
            sc.state, sc.keeper = update_epoch(sc.state, sc.keeper, sc.rng)
        for _ in range(4):
            sc.publish(sc.random_message())
        granted = {b: _grant_and_open(bls, sc, b, provider, rng) for b in sc.messages}
        for n in range(1, 6):
            sc.state, sc.keeper = update_epoch(sc.state, sc.keeper, sc.rng)
            for b, old_key in granted.items():
                if n in failures_after:
                    try:
                        decrypt_block(sc.chain, sc.state, b, old_key)
                    except IntegrityError as exc:
                        failures_after[n].append(exc.results)
                    else:
                        failures_after[n].append([True])
                fresh = _grant_and_open(bls, sc, b, provider, rng)
                regrants.append(decrypt_block(sc.chain, sc.state, b, fresh) == sc.messages[b])
    return failures_after, regrants


@pytest.mark.criterion(2, "revocation of unlocked keys after 1, 2 and 5 updates")
def test_revocation(revocation_runs):
    failures_after, _ = revocation_runs
    for n, results in failures_after.items():
        assert len(results) >= 100
        accidental = sum(ok for shard_results in results for ok in shard_results)
        assert accidental == 0, f"{accidental} shard digests passed after {n} update(s)"


@pytest.mark.criterion(3, "re-grant after every update decrypts")
def test_regrant(revocation_runs):
    _, regrants = revocation_runs
    assert len(regrants) >= 500 and all(regrants)


# ----------------------------------------------------------------------- 4 + 7


def _matching_slots(group, chain, state):
    """For each block, every shard slot whose pairing with the block's key reproduces
    its control shard, found by trying all slots."""
    return {
        b: {i for i, shard in enumerate(state.shards.shards, start=1)
            if group.pair(shard, state.keys[b].k1) == chain[b].control}
        for b in range(1, len(chain) + 1)
    }


def _check_tamper_sets(group, sc):
    slots = _matching_slots(group, sc.chain, sc.state)
    assert all(len(s) == 1 for s in slots.values())
    for b, key in sc.state.keys.items():
        keys = dict(sc.state.keys)
        keys[b] = EncapsulatedKey(b, key.epoch, key.k1 * group.g2_base())
        report = audit_variable_state(sc.chain, dataclasses.replace(sc.state, keys=keys))
        assert report.failed_blocks == {b}
    for i in range(1, sc.params.shard_count + 1):
        shards = list(sc.state.shards.shards)
        shards[i - 1] = shards[i - 1] * group.g1_base()
        tampered = dataclasses.replace(sc.state, shards=dataclasses.replace(sc.state.shards, shards=tuple(shards)))
        predicted = {b for b, s in slots.items() if i in s}
        assert audit_variable_state(sc.chain, tampered).failed_blocks == predicted


@pytest.mark.criterion(4, "control-shard consistency over 5 updates")
@pytest.mark.parametrize("shards", [3, 4])
def test_control_consistency(group, shards):
    sc = build(group, shards=shards, blocks=10, seed=shards)
    assert audit_variable_state(sc.chain, sc.state).ok
    _check_tamper_sets(group, sc)
    for epoch in range(1, 6):
        sc.state, sc.keeper = update_epoch(sc.state, sc.keeper, sc.rng)
        assert sc.state.epoch == epoch
        report = audit_variable_state(sc.chain, sc.state)
        assert report.ok and report.checked == 10
        _check_tamper_sets(group, sc)


@pytest.mark.criterion(7, "keeper rotation between updates")
@pytest.mark.parametrize("variant", list(Variant))
def test_keeper_rotation(group, variant):
    sc = build(group, shards=4, blocks=10, seed=9, variant=variant)
    rng = random.Random(9)
    provider = provider_keygen(group, rng)
    for epoch in range(1, 6):
        sc.state, sc.keeper = update_epoch(sc.state, sc.keeper, sc.rng)
        retired = sc.keeper
        channel = []
        keeper_rotate(retired, channel.append)
        sc.keeper = keeper_adopt(group, channel.pop())
        assert sc.keeper.epoch == epoch

        # the retired keeper refuses every operation
        q = sc.users[0].q
        with pytest.raises(KeeperStateError):
            keeper_issue_token(retired, q)
        with pytest.raises(KeeperStateError):
            update_epoch(sc.state, retired, sc.rng)
        with pytest.raises(KeeperStateError):
            keeper_update_encapsulated(retired, sc.keeper, sc.state.keys[1])
        with pytest.raises(KeeperStateError):
            keeper_rotate(retired)

        # the successor carries on: audits, fresh publications and grants all work
        assert audit_variable_state(sc.chain, sc.state).ok
        assert audit_chain(sc.chain).ok
        _check_tamper_sets(group, sc)
        b = sc.publish(sc.random_message()).index
        for block in (1, b):
            key = _grant_and_open(group, sc, block, provider, rng)
            assert decrypt_block(sc.chain, sc.state, block, key, _entries(sc, block)) == sc.messages[block]


# --------------------------------------------------------------------------- 5


@pytest.mark.criterion(5, "every single-bit flip of a serialized chain is detected")
@pytest.mark.parametrize("variant", list(Variant))
@pytest.mark.parametrize("backend", ["toy", "bls12-381"])
def test_bit_flips(toy, bls, backend, variant):
    group = toy if backend == "toy" else bls
    key = Ed25519PrivateKey.from_private_bytes(bytes(range(32)))
    sc = build(group, shards=3, blocks=6, variant=variant, warrant=signature_warrant(key))
    data = codec.encode_chain(sc.chain)
    trusted = {public_key_bytes(key)}
    assert codec.audit_chain_bytes(data, sc.params, trusted=trusted).ok
    rng = random.Random(f"{backend}/{variant.value}")
    flips = rng.sample(range(len(data) * 8), 500)
    missed = []
    for bit in flips:
        corrupt = bytearray(data)
        corrupt[bit // 8] ^= 1 << (bit % 8)
        if codec.audit_chain_bytes(bytes(corrupt), sc.params, trusted=trusted).ok:
            missed.append(bit)
    assert len(flips) == 500 and missed == []


# --------------------------------------------------------------------------- 6


@pytest.mark.criterion(6, "toy-backend discrete logs match the closed forms")
def test_toy_closed_forms():
    rng = random.Random(6)
    primes = [p for p in primes_upto(101) if p >= 5]
    groups = {p: ToyGroup(p) for p in primes}
    draws = 0
    while draws < 1000:
        p = rng.choice(primes)
        G = groups[p]
        g = G.generator
        gt = g * g % p
        shards = rng.randint(1, 4)
        trace, etrace = {}, {}
        params, ms, keeper = keeper_setup(G, shards * G.pad_width, rng, trace=trace)
        user = user_keygen(G, rng)
        for _ in range(rng.randrange(3)):
            ms, keeper = keeper_update_shards(keeper, ms, rng)
        s = keeper.time_key
        u = trace["u"]
        token = keeper_issue_token(keeper, user.q)
        message = rng.randbytes(rng.randint(1, params.capacity))
        payload = user_encrypt(params, user, token, ms, message, rng, trace=etrace)
        k_b = etrace["k_b"]
        inv_s = pow(s, -1, p)
        k1 = payload.encapsulated(1).k1
        k2 = user_unlock(G, user, payload.encapsulated(1)).k2

        for i, shard in enumerate(ms.shards):
            assert dlog(toy_value(shard), g, p) == u[i] * s % p
        assert dlog(toy_value(token.k0), g, p) == user.mu * inv_s % p
        assert dlog(toy_value(k1), g, p) == user.v * k_b * inv_s % p
        assert dlog(toy_value(k2), g, p) == user.mu * k_b * inv_s % p
        for i in range(len(payload.ciphertexts)):
            pad = G.pair(ms.shards[i], token.k0 ** k_b)
            assert dlog(toy_value(pad), gt, p) == u[i] * k_b * user.mu % p
            expected = bytes(a ^ b for a, b in zip(G.gt_to_pad(pad), payload.ciphertexts[i]))
            assert expected == message[i * G.pad_width:(i + 1) * G.pad_width].ljust(G.pad_width, b"\0")
        control = G.pair(ms.shards[0], k1)  # block 1 uses slot 1
        assert dlog(toy_value(control), gt, p) == u[0] * k_b * user.v % p
        draws += 1
    assert draws >= 1000


# --------------------------------------------------------------------------- 8


@pytest.mark.criterion(8, "golden serialization")
def test_golden():
    with tempfile.TemporaryDirectory() as tmp:
        files = run(Path(tmp))
    for name in FILES:
        assert files[name] == (GOLDEN_DIR / f"{name}.bin").read_bytes(), name

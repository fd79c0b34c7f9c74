import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskshards.bilinear import Backend, Kind, ToyGroup, group_from_description, is_prime
from maskshards.errors import ElementDecodeError, ParameterError

from oracles import dlog, primes_upto, smallest_primitive_root, toy_value


class TestToyBackend:
    def test_generator_is_smallest_primitive_root(self, toy):
        assert toy.generator == smallest_primitive_root(101) == 2
        assert toy_value(toy.g1_base()) == 2
        assert toy_value(toy.g2_base()) == 2

    @pytest.mark.parametrize("p", [5, 7, 11, 13, 53, 97, 101])
    def test_generator_matches_oracle(self, p):
        assert ToyGroup(p).generator == smallest_primitive_root(p)

    def test_bilinearity_exhaustive(self, toy):
        g1, g2 = toy.g1_base(), toy.g2_base()
        e = toy.pair(g1, g2)
        p = toy.order
        for a in range(p):
            ga = toy.exp_g1(g1, a)
            for b in range(p):
                assert toy.pair(ga, toy.exp_g2(g2, b)) == toy.exp_gt(e, a * b % p)

    def test_pair_values_against_integer_oracle(self, toy):
        g = toy.generator
        for a in range(101):
            x = toy.pair(toy.g1_base() ** a, toy.g2_base())
            assert dlog(toy_value(x), g * g % 101, 101) == a

    def test_scalar_inverse_exhaustive(self, toy):
        for s in range(1, toy.order):
            assert s * toy.scalar_inv(s) % toy.order == 1

    def test_gt_to_pad_injective_exhaustive(self, toy):
        pads = {toy.gt_to_pad(toy.pair(toy.g1_base() ** a, toy.g2_base())) for a in range(101)}
        assert len(pads) == 101
        assert all(len(x) == toy.description.gt_bytes == 1 for x in pads)

    def test_encoding_is_fixed_width_big_endian(self):
        G = ToyGroup(65537)
        assert G.description.g1_bytes == 3
        assert bytes(G.g1_base() ** 300) == (300 * G.generator % 65537).to_bytes(3, "big")

    def test_decode_rejects_out_of_range(self, toy):
        with pytest.raises(ElementDecodeError):
            toy.decode(Kind.G1, bytes([101]))

    def test_rejects_composite_order(self):
        with pytest.raises(ParameterError):
            ToyGroup(100)

    def test_prime_check_against_sieve(self):
        small = set(primes_upto(2000))
        assert {n for n in range(2000) if is_prime(n)} == small


class TestBothBackends:
    def test_zero_exponent_gives_gt_identity(self, group):
        assert group.pair(group.g1_base() ** 0, group.g2_base() ** 12345).is_identity()

    def test_non_degenerate(self, group):
        assert not group.pair(group.g1_base(), group.g2_base()).is_identity()

    def test_exponent_by_order_is_identity(self, group):
        assert (group.g1_base() ** group.order).is_identity()
        assert group.exp_g2(group.g2_base(), group.order).is_identity()

    def test_scalar_inv_of_one(self, group):
        assert group.scalar_inv(1) == 1

    def test_scalar_inv_of_zero(self, group):
        with pytest.raises(ZeroDivisionError):
            group.scalar_inv(0)

    def test_scalar_random_never_trivial(self, group):
        rng = random.Random(7)
        assert all(group.scalar_random(rng) not in (0, 1) for _ in range(10_000))

    def test_generators_are_deterministic(self, group):
        assert bytes(group.g1_base()) == bytes(group.g1_base())
        assert bytes(group.g2_base()) == bytes(group.g2_base())

    def test_pad_width(self, group):
        x = group.pair(group.g1_base() ** 5, group.g2_base())
        assert len(group.gt_to_pad(x)) == group.description.gt_bytes == group.pad_width
        assert group.gt_to_pad(x) == group.gt_to_pad(group.pair(group.g1_base(), group.g2_base() ** 5))

    def test_group_law_and_inverse(self, group):
        g = group.g2_base()
        assert g ** 3 * g ** 4 == g ** 7
        assert (g ** 9 / g ** 4) == g ** 5
        assert (g ** 5 * (g ** 5).inverse()).is_identity()

    def test_description_round_trip(self, group):
        assert group_from_description(group.description).description == group.description

    def test_mixing_kinds_is_rejected(self, group):
        with pytest.raises(TypeError):
            group.pair(group.g2_base(), group.g1_base())


class TestProductionBackend:
    def test_standard_generator_encoding(self, bls):
        assert bls.description.backend is Backend.PRODUCTION
        assert bytes(bls.g1_base()).hex().startswith("97f1d3a73197d794")
        assert bytes(bls.g2_base()).hex().startswith("93e02b6052719f60")

    def test_bilinearity_randomized(self, bls):
        rng = random.Random(1)
        g1, g2 = bls.g1_base(), bls.g2_base()
        e = bls.pair(g1, g2)
        for _ in range(1000):
            a, b = rng.randrange(bls.order), rng.randrange(bls.order)
            assert bls.pair(g1 ** a, g2 ** b) == e ** (a * b)

    def test_gt_exponent_matches_pairing(self, bls):
        e = bls.pair(bls.g1_base(), bls.g2_base())
        assert e ** 12 == bls.pair(bls.g1_base() ** 3, bls.g2_base() ** 4)
        assert (e ** 12).inverse() * e ** 12 == bls.identity(Kind.GT)

    def test_decoded_gt_compares_but_refuses_arithmetic(self, bls):
        x = bls.pair(bls.g1_base() ** 3, bls.g2_base())
        y = bls.decode(Kind.GT, bytes(x))
        assert y == x and bytes(y) == bytes(x)
        with pytest.raises(TypeError):
            y * x

    def test_decode_rejects_garbage(self, bls):
        with pytest.raises(ElementDecodeError):
            bls.decode(Kind.G1, bytes(48))
        with pytest.raises(ElementDecodeError):
            bls.decode(Kind.G2, b"\x01" * 95)
        with pytest.raises(ElementDecodeError):
            bls.decode(Kind.GT, b"\xff" * 576)


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(list(Kind)), s=st.integers(min_value=0))
def test_encoding_round_trip(kind, s):
    from maskshards.bilinear import production_group

    for G in (ToyGroup(101), production_group()):
        base = {Kind.G1: G.g1_base(), Kind.G2: G.g2_base()}.get(kind) or G.pair(G.g1_base(), G.g2_base())
        x = base ** s
        assert G.decode(kind, bytes(x)) == x
        assert len(bytes(x)) == G.description.width(kind)

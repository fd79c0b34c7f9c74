"""Bilinear groups behind one small interface.

Two interchangeable backends are provided:

* :class:`BLS12381Group` -- the BLS12-381 pairing curve (asymmetric, Type-3),
  backed by the arkworks bindings in ``py_arkworks_bls12381``.
* :class:`ToyGroup` -- ``G1 = G2 = GT = (Z_p, +)`` with ``pair(a, b) = a*b mod p``.
  Algebraically exact and cryptographically worthless; every discrete log
  can be recovered by exhaustive search, which makes it a test oracle.

Elements use multiplicative notation regardless of backend::

    >>> G = ToyGroup(101)
    >>> g1, g2 = G.g1_base(), G.g2_base()
    >>> G.pair(g1 ** 3, g2 ** 5) == G.pair(g1, g2) ** 15
    True

Scalars are plain ``int`` values reduced modulo the group order.
"""

from __future__ import annotations

import enum
import secrets
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Protocol

from .errors import ElementDecodeError, ParameterError


class RandomSource(Protocol):
    def randrange(self, start: int, stop: int) -> int: ...


class Kind(enum.Enum):
    G1 = "G1"
    G2 = "G2"
    GT = "GT"


class Backend(str, enum.Enum):
    PRODUCTION = "production-curve"
    TOY = "toy-integer"


@dataclass(frozen=True)
class GroupDescription:
    backend: Backend
    order: int
    g1_bytes: int
    g2_bytes: int
    gt_bytes: int

    def width(self, kind: Kind) -> int:
        return {Kind.G1: self.g1_bytes, Kind.G2: self.g2_bytes, Kind.GT: self.gt_bytes}[kind]


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24 and overwhelmingly
    reliable above (bases are the first 13 primes)."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if n % q == 0:
            return n == q
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class Element:
    """A group element bound to its group and kind.

    ``*`` is the group law, ``**`` exponentiates by an integer scalar and
    ``bytes(x)`` gives the canonical fixed-width encoding.
    """

    __slots__ = ("group", "kind", "raw")

    def __init__(self, group: BilinearGroup, kind: Kind, raw: Any):
        self.group = group
        self.kind = kind
        self.raw = raw

    def _check(self, other: object) -> Element:
        if not isinstance(other, Element) or other.kind is not self.kind:
            raise TypeError(f"cannot combine {self.kind.value} with {other!r}")
        if other.group.description != self.group.description:
            raise TypeError("elements belong to different groups")
        return other

    def __mul__(self, other: Element) -> Element:
        other = self._check(other)
        return Element(self.group, self.kind, self.group._op(self.kind, self.raw, other.raw))

    def __truediv__(self, other: Element) -> Element:
        return self * self._check(other).inverse()

    def __pow__(self, scalar: int) -> Element:
        s = int(scalar) % self.group.order
        return Element(self.group, self.kind, self.group._pow(self.kind, self.raw, s))

    def inverse(self) -> Element:
        return Element(self.group, self.kind, self.group._neg(self.kind, self.raw))

    def is_identity(self) -> bool:
        return self == self.group.identity(self.kind)

    def __bytes__(self) -> bytes:
        return self.group._encode(self.kind, self.raw)

    def hex(self) -> str:
        return bytes(self).hex()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Element):
            return NotImplemented
        if other.kind is not self.kind or other.group.description != self.group.description:
            return False
        return bytes(self) == bytes(other)

    def __hash__(self) -> int:
        return hash((self.kind, bytes(self)))

    def __repr__(self) -> str:
        h = self.hex()
        return f"<{self.kind.value} {h[:16]}{'...' if len(h) > 16 else ''}>"


class BilinearGroup(ABC):
    """Common surface of both backends."""

    description: GroupDescription

    @property
    def order(self) -> int:
        return self.description.order

    @property
    def pad_width(self) -> int:
        """Width in bytes of a one-time pad derived from a GT element."""
        return self.description.gt_bytes

    # -- backend primitives -------------------------------------------------
    @abstractmethod
    def _op(self, kind: Kind, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def _pow(self, kind: Kind, a: Any, s: int) -> Any: ...

    @abstractmethod
    def _neg(self, kind: Kind, a: Any) -> Any: ...

    @abstractmethod
    def _identity(self, kind: Kind) -> Any: ...

    @abstractmethod
    def _generator(self, kind: Kind) -> Any: ...

    @abstractmethod
    def _pair(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def _encode(self, kind: Kind, raw: Any) -> bytes: ...

    @abstractmethod
    def _decode(self, kind: Kind, data: bytes) -> Any: ...

    # -- public operations -----------------------------------------------------
    def g1_base(self) -> Element:
        return Element(self, Kind.G1, self._generator(Kind.G1))

    def g2_base(self) -> Element:
        return Element(self, Kind.G2, self._generator(Kind.G2))

    def identity(self, kind: Kind) -> Element:
        return Element(self, kind, self._identity(kind))

    def pair(self, a: Element, b: Element) -> Element:
        if not isinstance(a, Element) or a.kind is not Kind.G1:
            raise TypeError("first pairing argument must be a G1 element")
        if not isinstance(b, Element) or b.kind is not Kind.G2:
            raise TypeError("second pairing argument must be a G2 element")
        return Element(self, Kind.GT, self._pair(a.raw, b.raw))

    def exp_g1(self, base: Element, s: int) -> Element:
        return self._exp(Kind.G1, base, s)

    def exp_g2(self, base: Element, s: int) -> Element:
        return self._exp(Kind.G2, base, s)

    def exp_gt(self, base: Element, s: int) -> Element:
        return self._exp(Kind.GT, base, s)

    def _exp(self, kind: Kind, base: Element, s: int) -> Element:
        if base.kind is not kind:
            raise TypeError(f"expected a {kind.value} element, got {base.kind.value}")
        return base ** s

    def scalar_random(self, rng: RandomSource | None = None) -> int:
        """Uniform scalar in ``[2, p)``; 0 and 1 are never returned."""
        rng = rng or secrets.SystemRandom()
        return rng.randrange(2, self.order)

    def scalar_inv(self, s: int) -> int:
        s %= self.order
        if s == 0:
            raise ZeroDivisionError("zero scalar has no inverse")
        return pow(s, -1, self.order)

    def gt_to_pad(self, x: Element) -> bytes:
        if x.kind is not Kind.GT:
            raise TypeError("pads are derived from GT elements only")
        return bytes(x)

    def encode(self, x: Element) -> bytes:
        return bytes(x)

    def decode(self, kind: Kind, data: bytes) -> Element:
        data = bytes(data)
        width = self.description.width(kind)
        if len(data) != width:
            raise ElementDecodeError(
                f"{kind.value} encoding must be {width} bytes, got {len(data)}"
            )
        return Element(self, kind, self._decode(kind, data))


class ToyGroup(BilinearGroup):
    """``G1 = G2 = GT = Z_p`` under addition, ``pair(a, b) = a*b mod p``.

    The generator of the source groups is the smallest primitive root of
    ``p``; the GT generator is its square. Only meant as a brute-force
    oracle in tests and deterministic demos.
    """

    def __init__(self, p: int = 101):
        if not is_prime(p) or p < 5:
            raise ParameterError(f"toy group order must be a prime >= 5, got {p}")
        width = (p.bit_length() + 7) // 8
        self.description = GroupDescription(Backend.TOY, p, width, width, width)
        self.generator = primitive_root(p)

    def _op(self, kind, a, b):
        return (a + b) % self.order

    def _pow(self, kind, a, s):
        return a * s % self.order

    def _neg(self, kind, a):
        return -a % self.order

    def _identity(self, kind):
        return 0

    def _generator(self, kind):
        if kind is Kind.GT:
            return self.generator * self.generator % self.order
        return self.generator

    def _pair(self, a, b):
        return a * b % self.order

    def _encode(self, kind, raw):
        return raw.to_bytes(self.description.gt_bytes, "big")

    def _decode(self, kind, data):
        v = int.from_bytes(data, "big")
        if v >= self.order:
            raise ElementDecodeError(f"toy element {v} out of range for p={self.order}")
        return v

    def dlog(self, x: Element) -> int:
        """Discrete log of ``x`` to the base generator of its group, by exhaustive search."""
        base = self.gt_base() if x.kind is Kind.GT else Element(self, x.kind, self.generator)
        acc = self.identity(x.kind)
        for k in range(self.order):
            if acc == x:
                return k
            acc = acc * base
        raise AssertionError("unreachable: every toy element has a discrete log")

    def gt_base(self) -> Element:
        return Element(self, Kind.GT, self._generator(Kind.GT))


def primitive_root(p: int) -> int:
    """Smallest primitive root modulo the prime ``p``."""
    n = p - 1
    factors, m, q = set(), n, 2
    while q * q <= m:
        while m % q == 0:
            factors.add(q)
            m //= q
        q += 1
    if m > 1:
        factors.add(m)
    for g in range(2, p):
        if all(pow(g, n // f, p) != 1 for f in factors):
            return g
    raise ParameterError(f"no primitive root for {p}")


# BLS12-381 base field modulus; every Fq coefficient of a GT encoding is below it.
_BLS_Q = int(
    "1a0111ea397fe69a4b1ba7b6434bacd764774b84f38512bf6730d2a0f6b0f624"
    "1eabfffeb153ffffb9feffffffffaaab",
    16,
)
_BLS_R = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001


class BLS12381Group(BilinearGroup):
    """BLS12-381 via arkworks.

    G1/G2 use the standard compressed encodings (48/96 bytes). GT elements
    are encoded as the 576-byte serialization of the Fq12 value (twelve
    little-endian 48-byte coefficients). The bindings cannot rebuild a GT
    element from bytes, so decoded GT elements carry only their encoding:
    they compare and re-encode exactly but refuse arithmetic.
    """

    def __init__(self):
        import py_arkworks_bls12381 as ark

        self._ark = ark
        self.description = GroupDescription(Backend.PRODUCTION, _BLS_R, 48, 96, 576)
        self._gt_gen = ark.GT.pairing(ark.G1Point(), ark.G2Point())

    def _scalar(self, s: int):
        return self._ark.Scalar(s % self.order)

    def _native_gt(self, raw):
        if isinstance(raw, bytes):
            raise TypeError("GT element decoded from bytes supports comparison and encoding only")
        return raw

    def _op(self, kind, a, b):
        if kind is Kind.GT:
            return self._native_gt(a) * self._native_gt(b)
        return a + b

    def _pow(self, kind, a, s):
        if kind is Kind.GT:
            a = self._native_gt(a)
            result = self._ark.GT.one()
            for bit in bin(s)[2:]:
                result = result * result
                if bit == "1":
                    result = result * a
            return result
        return a * self._scalar(s)

    def _neg(self, kind, a):
        if kind is Kind.GT:
            return self._pow(kind, a, self.order - 1)
        return -a

    def _identity(self, kind):
        if kind is Kind.G1:
            return self._ark.G1Point.identity()
        if kind is Kind.G2:
            return self._ark.G2Point.identity()
        return self._ark.GT.one()

    def _generator(self, kind):
        if kind is Kind.G1:
            return self._ark.G1Point()
        if kind is Kind.G2:
            return self._ark.G2Point()
        return self._gt_gen

    def _pair(self, a, b):
        return self._ark.GT.pairing(a, b)

    def _encode(self, kind, raw):
        if kind is Kind.GT:
            return raw if isinstance(raw, bytes) else bytes.fromhex(str(raw))
        return bytes(raw.to_compressed_bytes())

    def _decode(self, kind, data):
        if kind is Kind.GT:
            for k in range(12):
                if int.from_bytes(data[48 * k : 48 * (k + 1)], "little") >= _BLS_Q:
                    raise ElementDecodeError(f"GT coefficient {k} is not reduced mod q")
            return data
        cls = self._ark.G1Point if kind is Kind.G1 else self._ark.G2Point
        try:
            return cls.from_compressed_bytes(data)
        except ValueError as exc:
            raise ElementDecodeError(f"invalid {kind.value} encoding: {exc}") from None


_PRODUCTION: BLS12381Group | None = None


def production_group() -> BLS12381Group:
    global _PRODUCTION
    if _PRODUCTION is None:
        _PRODUCTION = BLS12381Group()
    return _PRODUCTION


def group_from_description(desc: GroupDescription) -> BilinearGroup:
    """Rebuild a group from its description, checking the widths agree."""
    if desc.backend is Backend.PRODUCTION:
        group: BilinearGroup = production_group()
    elif desc.backend is Backend.TOY:
        group = ToyGroup(desc.order)
    else:  # pragma: no cover
        raise ParameterError(f"unknown backend {desc.backend!r}")
    if group.description != desc:
        raise ParameterError("group description does not match its backend")
    return group

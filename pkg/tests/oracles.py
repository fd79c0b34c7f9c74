"""Brute-force reference computations, independent of the package internals.

Toy-group elements are plain integers ``x = k*g mod p``; these helpers only use
integer arithmetic, never the library's group code.
"""

from __future__ import annotations


def primes_upto(n: int) -> list[int]:
    sieve = [True] * (n + 1)
    sieve[0:2] = [False, False]
    for i in range(2, int(n**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = [False] * len(sieve[i * i :: i])
    return [i for i, ok in enumerate(sieve) if ok]


def smallest_primitive_root(p: int) -> int:
    """First g whose powers enumerate all of Z_p^*."""
    for g in range(2, p):
        if len({pow(g, k, p) for k in range(1, p)}) == p - 1:
            return g
    raise ValueError(p)


def dlog(x: int, base: int, p: int) -> int:
    """k such that k*base == x (mod p), by enumeration."""
    for k in range(p):
        if k * base % p == x:
            return k
    raise ValueError(f"{x} not in the span of {base} mod {p}")


def toy_value(element) -> int:
    """Integer behind a toy-group element, read from its canonical big-endian bytes."""
    return int.from_bytes(bytes(element), "big")


def leading_zero_bits(digest: bytes) -> int:
    n = 0
    for byte in digest:
        if byte == 0:
            n += 8
            continue
        return n + 8 - byte.bit_length()
    return n

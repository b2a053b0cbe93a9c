"""Deterministic universal hashing for integers and strings.

Everything here is a pure function of its inputs: hash families are fully
determined by (seed, k, m), so encodings can be regenerated bit-exactly on
any machine without storing anything beyond O(k) integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy

MASK64 = (1 << 64) - 1

# FNV-1a 64-bit constants.
FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3

# Number of candidate primes just above m that the seeded generator picks from.
PRIME_TABLE_SIZE = 64


class ConfigError(ValueError):
    """Raised for invalid hashing / scheme configuration."""


class SplitMix64:
    """Counter-based 64-bit generator with fixed, documented constants.

    Chosen so that families are reproducible across languages: the update is
    a single 64-bit add of the golden-ratio increment followed by two
    xor-shift-multiply mixing rounds.
    """

    GAMMA = 0x9E3779B97F4A7C15
    MIX1 = 0xBF58476D1CE4E5B9
    MIX2 = 0x94D049BB133111EB

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + self.GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * self.MIX1) & MASK64
        z = ((z ^ (z >> 27)) * self.MIX2) & MASK64
        return z ^ (z >> 31)

    def next_below(self, bound: int) -> int:
        # Modulo bias is < 2**-40 for the bounds used here (< 2**24).
        return self.next_u64() % bound


@dataclass(frozen=True)
class UniversalHashParams:
    """One Carter-Wegman triple h(x) = ((a*x + b) mod p) mod m.

    p is prime and > m; a, b are drawn from {1, ..., p-1} so that both
    a mod p != 0 and b != 0 hold.
    """

    a: int
    b: int
    p: int
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"bucket count m must be >= 1, got {self.m}")
        if self.p <= self.m:
            raise ConfigError(f"prime p={self.p} must exceed m={self.m}")
        if self.a % self.p == 0:
            raise ConfigError("multiplier a must be nonzero mod p")
        if self.b == 0:
            raise ConfigError("offset b must be nonzero")


@dataclass(frozen=True)
class HashFamily:
    """k universal hash functions sharing one bucket count m.

    Regenerating from the same (seed, k, m) yields identical params,
    bit-exactly. Duplicate triples are rejected and redrawn.
    """

    seed: int
    k: int
    m: int
    params: tuple[UniversalHashParams, ...]
    # Cached column arrays for vectorised hashing.
    _a: np.ndarray = field(repr=False, compare=False, default=None)
    _b: np.ndarray = field(repr=False, compare=False, default=None)
    _p: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        a = np.array([t.a for t in self.params], dtype=np.uint64)
        b = np.array([t.b for t in self.params], dtype=np.uint64)
        p = np.array([t.p for t in self.params], dtype=np.uint64)
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_b", b)
        object.__setattr__(self, "_p", p)


@lru_cache(maxsize=32)
def primes_above(m: int, count: int = PRIME_TABLE_SIZE) -> tuple[int, ...]:
    """First `count` primes strictly larger than m."""
    out = []
    p = int(m)
    for _ in range(count):
        p = int(sympy.nextprime(p))
        out.append(p)
    return tuple(out)


def make_hash_family(seed: int, k: int, m: int) -> HashFamily:
    """Generate k mutually distinct universal hash triples from a seed."""
    if k < 1:
        raise ConfigError(f"need k >= 1 hash functions, got {k}")
    if m < 2:
        raise ConfigError(f"need m >= 2 buckets, got {m}")
    table = primes_above(m)
    gen = SplitMix64(seed)
    seen: set[tuple[int, int, int]] = set()
    params = []
    while len(params) < k:
        p = table[gen.next_below(len(table))]
        a = 1 + gen.next_below(p - 1)
        b = 1 + gen.next_below(p - 1)
        triple = (a, b, p)
        if triple in seen:
            continue
        seen.add(triple)
        params.append(UniversalHashParams(a=a, b=b, p=p, m=m))
    return HashFamily(seed=seed, k=k, m=m, params=tuple(params))


def hash_int(params: UniversalHashParams, x: int) -> int:
    """((a*x + b) mod p) mod m, exact for any non-negative x."""
    return ((params.a * x + params.b) % params.p) % params.m


def hash_int_batch(family: HashFamily, xs: np.ndarray) -> np.ndarray:
    """Bucket indices for a batch, shape (len(xs), k), dtype uint64.

    Reduces x mod p before multiplying so every intermediate fits in 64
    bits: a, b < p and p is only a little above m, hence a*(x mod p)+b
    < p**2 + p, far below 2**64 for the bucket counts used here.
    """
    x = np.asarray(xs, dtype=np.uint64).reshape(-1, 1)
    p = family._p[np.newaxis, :]
    h = (family._a[np.newaxis, :] * (x % p) + family._b[np.newaxis, :]) % p
    return h % np.uint64(family.m)


def hash_string(s: str | bytes) -> int:
    """FNV-1a 64-bit digest of a byte string (strings are UTF-8 encoded).

    hash_string("") == FNV64_OFFSET == 14695981039346656037.
    """
    if isinstance(s, str):
        s = s.encode("utf-8")
    h = FNV64_OFFSET
    for byte in s:
        h = ((h ^ byte) * FNV64_PRIME) & MASK64
    return h

"""Encoding functions mapping a categorical value to a vector.

Covers the whole taxonomy: identity, binary, one-hot (full / hashed /
multi-hash) and the dense hash encoding with uniform or Gaussian
transforms, plus side-feature concatenation. All encoders are pure and
storage-free; buckets are 0-based throughout and the uniform transform
h/(m-1)*2-1 absorbs the index convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hashing import ConfigError, HashFamily, UniversalHashParams, hash_int, hash_int_batch

# Smallest uniform value fed to the Box-Muller logarithm. Bounds the output
# magnitude at ~8.5 sigma without measurably distorting the distribution.
BOX_MULLER_EPS = 2.0 ** -52


class DomainError(ValueError):
    """Raised when a value lies outside the declared vocabulary."""


@dataclass(frozen=True)
class Encoding:
    values: np.ndarray
    kind: str  # "indicator" | "dense"

    @property
    def length(self) -> int:
        return self.values.shape[-1]


@dataclass(frozen=True)
class DenseHashEncoderConfig:
    family: HashFamily
    distribution: str = "uniform"  # "uniform" | "gaussian"

    def __post_init__(self):
        if self.distribution not in ("uniform", "gaussian"):
            raise ConfigError(f"unknown distribution {self.distribution!r}")


def encode_identity(x: int, n: int) -> Encoding:
    """1-dim encoding [x/(n-1)], normalized into [0, 1]."""
    if n < 2:
        raise ConfigError("identity encoding needs n >= 2")
    if not 0 <= x < n:
        raise DomainError(f"value {x} outside vocabulary of size {n}")
    return Encoding(np.array([x / (n - 1)]), kind="dense")


def binary_width(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


def encode_binary(x: int, n: int) -> Encoding:
    """MSB-first binary expansion, zero-padded to ceil(log2 n) bits."""
    if not 0 <= x < n:
        raise DomainError(f"value {x} outside vocabulary of size {n}")
    w = binary_width(n)
    bits = [(x >> (w - 1 - i)) & 1 for i in range(w)]
    return Encoding(np.array(bits, dtype=np.float64), kind="indicator")


def encode_binary_batch(xs: np.ndarray, n: int) -> np.ndarray:
    w = binary_width(n)
    xs = np.asarray(xs, dtype=np.uint64)
    shifts = np.arange(w - 1, -1, -1, dtype=np.uint64)
    return ((xs[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.float64)


def encode_onehot(x: int, n: int) -> Encoding:
    if not 0 <= x < n:
        raise DomainError(f"value {x} outside vocabulary of size {n}")
    v = np.zeros(n)
    v[x] = 1.0
    return Encoding(v, kind="indicator")


def encode_onehot_hash(x: int, params: UniversalHashParams) -> Encoding:
    """One-hot at the hashed bucket; out-of-vocab values are legal."""
    v = np.zeros(params.m)
    v[hash_int(params, x)] = 1.0
    return Encoding(v, kind="indicator")


def encode_multi_onehot(x: int, family: HashFamily, mode: str = "add") -> Encoding:
    """k hashed one-hots, either concatenated (length k*m) or summed into
    one shared length-m count vector ('add', the Bloom-style default)."""
    if mode not in ("concat", "add"):
        raise ConfigError(f"unknown aggregation mode {mode!r}")
    buckets = [hash_int(t, x) for t in family.params]
    if mode == "concat":
        v = np.zeros(family.k * family.m)
        for i, h in enumerate(buckets):
            v[i * family.m + h] = 1.0
    else:
        v = np.zeros(family.m)
        for h in buckets:
            v[h] += 1.0
    return Encoding(v, kind="indicator")


def transform_uniform(h, m: int):
    """Affine map of bucket index onto [-1, 1]; endpoints hit exactly."""
    if m < 2:
        raise ConfigError("uniform transform needs m >= 2")
    return (np.asarray(h, dtype=np.float64) / (m - 1)) * 2.0 - 1.0


def transform_gaussian(h: np.ndarray, m: int) -> np.ndarray:
    """Box-Muller on consecutive pairs of u = h/(m-1) in [0, 1].

    For odd length the trailing value is re-paired with the first value's
    uniform companion u[1]. u1 is clamped away from 0 before the log.
    Works on 1-d inputs or batches with pairs along the last axis.
    """
    if m < 2:
        raise ConfigError("gaussian transform needs m >= 2")
    u = np.asarray(h, dtype=np.float64) / (m - 1)
    squeeze = u.ndim == 1
    if squeeze:
        u = u[np.newaxis, :]
    k = u.shape[-1]
    n_pairs = k // 2
    u1 = np.clip(u[..., 0 : 2 * n_pairs : 2], BOX_MULLER_EPS, 1.0)
    u2 = u[..., 1 : 2 * n_pairs : 2]
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty_like(u)
    out[..., 0 : 2 * n_pairs : 2] = r * np.cos(2.0 * np.pi * u2)
    out[..., 1 : 2 * n_pairs : 2] = r * np.sin(2.0 * np.pi * u2)
    if k % 2 == 1:
        mate = u[..., 1] if k > 1 else u[..., 0]
        u_last = np.clip(u[..., -1], BOX_MULLER_EPS, 1.0)
        out[..., -1] = np.sqrt(-2.0 * np.log(u_last)) * np.cos(2.0 * np.pi * mate)
    return out[0] if squeeze else out


def dense_hash_encode(x: int, cfg: DenseHashEncoderConfig) -> Encoding:
    """k bucket indices transformed into a k-dim real vector."""
    return Encoding(dense_hash_encode_batch(np.array([x]), cfg)[0], kind="dense")


def dense_hash_encode_batch(xs: np.ndarray, cfg: DenseHashEncoderConfig) -> np.ndarray:
    """Vectorised dense hash encoding, shape (len(xs), k)."""
    h = hash_int_batch(cfg.family, xs)
    if cfg.distribution == "uniform":
        return transform_uniform(h, cfg.family.m)
    return transform_gaussian(h, cfg.family.m)


def enhance_with_side(encoding: Encoding, side: np.ndarray) -> Encoding:
    """Concatenate [hash part; side part]; order fixed for reproducibility."""
    side = np.asarray(side, dtype=np.float64).ravel()
    if not np.all(np.isfinite(side)):
        raise ValueError("side feature vector must be finite")
    return Encoding(np.concatenate([encoding.values, side]), kind="dense")

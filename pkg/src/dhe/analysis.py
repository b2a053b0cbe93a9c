"""Encoding-property analyzer: uniqueness, equal similarity, dimensionality
and per-dimension Shannon entropy, with closed-form predictions and Monte
Carlo estimators, emitting a machine-readable verdict matrix.

Analyzer encoders implement specialised batch paths (bucket keys, per-dim
entropies, pairwise squared distances) so the one-hot kinds never
materialise n-dim vectors for large samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .encoders import binary_width, encode_binary_batch, dense_hash_encode_batch, \
    DenseHashEncoderConfig
from .hashing import ConfigError, hash_int_batch, make_hash_family

# Verdict thresholds.
UNIQUENESS_EPS = 1e-3          # near-zero collision constant
HIGH_DIM_THRESHOLD = 100       # dims considered "high-dimensional"
ENTROPY_FRACTION = 0.9         # mean per-dim entropy >= 0.9 * max
DENSE_ENTROPY_BINS = 100

ENCODER_ORDER = (
    "onehot", "onehot_hash", "double_onehot_hash", "binary", "identity", "dense_hash",
)


def closed_form_collision(n: int, buckets: float) -> float:
    """Birthday-bound probability of any collision among n values hashed
    into `buckets` equally likely cells: 1 - exp(-n(n-1)/(2*buckets))."""
    if n < 1 or buckets < 1:
        raise ConfigError("need n >= 1 and buckets >= 1")
    return 1.0 - math.exp(-n * (n - 1) / (2.0 * buckets))


def closed_form_collision_log(n: int, log_buckets: float) -> float:
    """Same as closed_form_collision with buckets given as a natural log,
    for bucket counts like m**k that overflow floats."""
    log_rate = math.log(n) + math.log(max(n - 1, 1)) - math.log(2.0) - log_buckets
    if log_rate > 50:
        return 1.0
    return 1.0 - math.exp(-math.exp(log_rate))


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, 1.0)
    out = np.zeros_like(p)
    for q in (p, 1.0 - p):
        mask = q > 0
        out[mask] -= q[mask] * np.log(q[mask])
    return out


def _histogram_entropies(columns: np.ndarray, bins: int) -> np.ndarray:
    """Per-column entropy of an equal-width histogram over the observed
    range; never exceeds log(bins) by construction."""
    out = np.empty(columns.shape[1])
    for j in range(columns.shape[1]):
        counts, _ = np.histogram(columns[:, j], bins=bins)
        p = counts[counts > 0] / counts.sum()
        out[j] = float(-(p * np.log(p)).sum())
    return out


class AnalyzerEncoder:
    """Property-analysis view of one encoding function over V = {0..n-1}."""

    name: str = ""
    kind: str = "indicator"      # "indicator" | "dense"
    length: int = 0
    log_buckets: float | None = None   # None: injective (no collisions possible)
    dimension_configurable: bool = False  # length is a free parameter, not tied to n

    def __init__(self, n: int):
        self.n = n

    def keys(self, xs: np.ndarray):
        """Hashable exact-match key per value (equal keys <=> equal encodings)."""
        raise NotImplementedError

    def dim_entropies(self, xs: np.ndarray, bins: int) -> np.ndarray:
        raise NotImplementedError

    def pair_sqdist(self, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
        """Squared Euclidean distance between encodings of paired values."""
        raise NotImplementedError


class OneHotFullEncoder(AnalyzerEncoder):
    name = "onehot"

    def __init__(self, n):
        super().__init__(n)
        self.length = n

    def keys(self, xs):
        return np.asarray(xs, dtype=np.int64)

    def dim_entropies(self, xs, bins):
        counts = np.bincount(np.asarray(xs, dtype=np.int64), minlength=self.n)
        return _binary_entropy(counts / len(xs))

    def pair_sqdist(self, xa, xb):
        return 2.0 * (np.asarray(xa) != np.asarray(xb))


class OneHotHashEncoder(AnalyzerEncoder):
    name = "onehot_hash"

    def __init__(self, n, m, seed=0):
        super().__init__(n)
        self.m = m
        self.length = m
        self.family = make_hash_family(seed, 1, m)
        self.log_buckets = math.log(m)

    def _buckets(self, xs):
        return hash_int_batch(self.family, xs)[:, 0].astype(np.int64)

    def keys(self, xs):
        return self._buckets(xs)

    def dim_entropies(self, xs, bins):
        counts = np.bincount(self._buckets(xs), minlength=self.m)
        return _binary_entropy(counts / len(xs))

    def pair_sqdist(self, xa, xb):
        return 2.0 * (self._buckets(xa) != self._buckets(xb))


class DoubleOneHotHashEncoder(AnalyzerEncoder):
    name = "double_onehot_hash"

    def __init__(self, n, m, seed=0):
        super().__init__(n)
        self.m = m
        self.length = 2 * m
        self.family = make_hash_family(seed, 2, m)
        self.log_buckets = 2 * math.log(m)

    def _buckets(self, xs):
        return hash_int_batch(self.family, xs).astype(np.int64)

    def keys(self, xs):
        b = self._buckets(xs)
        return b[:, 0] * self.m + b[:, 1]

    def dim_entropies(self, xs, bins):
        b = self._buckets(xs)
        out = np.empty(self.length)
        for j in range(2):
            counts = np.bincount(b[:, j], minlength=self.m)
            out[j * self.m : (j + 1) * self.m] = _binary_entropy(counts / len(xs))
        return out

    def pair_sqdist(self, xa, xb):
        return 2.0 * (self._buckets(xa) != self._buckets(xb)).sum(axis=1)


class BinaryEncoder(AnalyzerEncoder):
    name = "binary"

    def __init__(self, n):
        super().__init__(n)
        self.length = binary_width(n)

    def keys(self, xs):
        return np.asarray(xs, dtype=np.int64)

    def dim_entropies(self, xs, bins):
        bits = encode_binary_batch(xs, self.n)
        return _binary_entropy(bits.mean(axis=0))

    def pair_sqdist(self, xa, xb):
        da = encode_binary_batch(xa, self.n)
        db = encode_binary_batch(xb, self.n)
        return ((da - db) ** 2).sum(axis=1)


class IdentityEncoder(AnalyzerEncoder):
    name = "identity"
    kind = "dense"
    length = 1

    def keys(self, xs):
        return np.asarray(xs, dtype=np.int64)

    def dim_entropies(self, xs, bins):
        vals = np.asarray(xs, dtype=np.float64)[:, None] / (self.n - 1)
        return _histogram_entropies(vals, bins)

    def pair_sqdist(self, xa, xb):
        a = np.asarray(xa, dtype=np.float64) / (self.n - 1)
        b = np.asarray(xb, dtype=np.float64) / (self.n - 1)
        return (a - b) ** 2


class DenseHashAnalyzerEncoder(AnalyzerEncoder):
    name = "dense_hash"
    kind = "dense"
    # The encoding length k is a free knob independent of the vocabulary,
    # so the dimensionality verdict reflects the scheme, not the sampled k.
    dimension_configurable = True

    def __init__(self, n, k, m, seed=0, distribution="uniform"):
        super().__init__(n)
        self.k = k
        self.m = m
        self.length = k
        self.cfg = DenseHashEncoderConfig(
            family=make_hash_family(seed, k, m), distribution=distribution)
        self.log_buckets = k * math.log(m)

    def keys(self, xs):
        buckets = hash_int_batch(self.cfg.family, xs)
        return [row.tobytes() for row in np.ascontiguousarray(buckets)]

    def dim_entropies(self, xs, bins):
        return _histogram_entropies(dense_hash_encode_batch(xs, self.cfg), bins)

    def pair_sqdist(self, xa, xb):
        da = dense_hash_encode_batch(xa, self.cfg)
        db = dense_hash_encode_batch(xb, self.cfg)
        return ((da - db) ** 2).sum(axis=1)


class RandomFourierEncoder(AnalyzerEncoder):
    """Test-suite baseline only: x -> [cos(2*pi*f_j*x/n)] with seeded
    frequencies. Not a supported production encoder."""

    name = "random_fourier"
    kind = "dense"

    def __init__(self, n, dim, seed=0):
        super().__init__(n)
        self.length = dim
        rng = np.random.default_rng(seed)
        self.freqs = rng.uniform(0.0, float(n), size=dim)

    def _encode(self, xs):
        x = np.asarray(xs, dtype=np.float64)[:, None]
        return np.cos(2.0 * np.pi * self.freqs[None, :] * x / self.n)

    def keys(self, xs):
        return np.asarray(xs, dtype=np.int64)

    def dim_entropies(self, xs, bins):
        return _histogram_entropies(self._encode(xs), bins)

    def pair_sqdist(self, xa, xb):
        return ((self._encode(xa) - self._encode(xb)) ** 2).sum(axis=1)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def estimate_collision_rate(encoder: AnalyzerEncoder, n_samples: int,
                            seed: int = 0) -> tuple[float, float]:
    """Returns (pair collision rate, fraction of values with non-unique
    encodings) over distinct sampled IDs (all of V when it fits)."""
    if n_samples < 2:
        raise ConfigError("need n_samples >= 2")
    if n_samples >= encoder.n:
        xs = np.arange(encoder.n, dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        xs = rng.choice(encoder.n, size=n_samples, replace=False).astype(np.int64)
    keys = encoder.keys(xs)
    _, counts = np.unique(np.asarray(keys), return_counts=True)
    n = len(xs)
    colliding_pairs = float((counts * (counts - 1) // 2).sum())
    total_pairs = n * (n - 1) / 2.0
    value_fraction = float(counts[counts > 1].sum()) / n
    return colliding_pairs / total_pairs, value_fraction


def entropy_per_dimension(encoder: AnalyzerEncoder, n_samples: int,
                          bins: int = DENSE_ENTROPY_BINS, seed: int = 0) -> np.ndarray:
    """Per-dimension histogram entropy (nats) over uniform draws from V.
    Indicator dimensions use their two natural bins."""
    if bins < 2:
        raise ConfigError("need bins >= 2")
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, encoder.n, size=n_samples)
    return encoder.dim_entropies(xs, bins)


def pairwise_distance_stats(encoder: AnalyzerEncoder, n_pairs: int,
                            seed: int = 0) -> tuple[float, float]:
    """(mean, variance) of squared Euclidean distance over uniformly drawn
    distinct ID pairs."""
    if n_pairs < 100:
        raise ConfigError("need n_pairs >= 100")
    xa, xb = _sample_distinct_pairs(encoder.n, n_pairs, seed)
    d = encoder.pair_sqdist(xa, xb)
    return float(d.mean()), float(d.var())


def _sample_distinct_pairs(n, n_pairs, seed):
    rng = np.random.default_rng(seed)
    xa = rng.integers(0, n, size=n_pairs)
    xb = rng.integers(0, n, size=n_pairs)
    same = xa == xb
    while np.any(same):
        xb[same] = rng.integers(0, n, size=int(same.sum()))
        same = xa == xb
    return xa, xb


def equal_similarity_test(encoder: AnalyzerEncoder, n_pairs: int,
                          seed: int = 0) -> tuple[bool, float, float]:
    """Adversarial split: compare mean squared distance of close-id pairs
    (|x-y| below the sample median) against far-id pairs. An equally
    similar encoding shows no gap beyond 3 standard errors."""
    xa, xb = _sample_distinct_pairs(encoder.n, n_pairs, seed)
    d = encoder.pair_sqdist(xa, xb).astype(np.float64)
    gap = np.abs(xa.astype(np.int64) - xb.astype(np.int64))
    near = gap <= np.median(gap)
    far = ~near
    if near.sum() < 2 or far.sum() < 2:
        return True, float(d.mean()), float(d.mean())
    m1, m2 = d[near].mean(), d[far].mean()
    se = math.sqrt(d[near].var(ddof=1) / near.sum() + d[far].var(ddof=1) / far.sum())
    return bool(abs(m1 - m2) <= 3.0 * se), float(m1), float(m2)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class PropertyReport:
    encoder: str
    sample_size: int
    dimensionality: int
    collision_rate: float          # empirical colliding-pair fraction
    predicted_collision: float     # closed-form any-collision probability
    per_dim_entropy_mean: float
    max_entropy: float
    distance_mean: float
    distance_variance: float
    near_pair_distance: float
    far_pair_distance: float
    unique: bool
    equal_similarity: bool
    high_dimensional: bool
    high_entropy: bool

    def verdicts(self) -> tuple[bool, bool, bool, bool]:
        return (self.unique, self.equal_similarity,
                self.high_dimensional, self.high_entropy)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def property_report(encoder: AnalyzerEncoder, n_samples: int = 10 ** 5,
                    bins: int = DENSE_ENTROPY_BINS, n_pairs: int = 10 ** 4,
                    seed: int = 0) -> PropertyReport:
    pair_rate, _value_fraction = estimate_collision_rate(encoder, n_samples, seed)
    if encoder.log_buckets is None:
        predicted = 0.0
    else:
        predicted = closed_form_collision_log(encoder.n, encoder.log_buckets)
    entropies = entropy_per_dimension(encoder, n_samples, bins, seed)
    max_h = math.log(2) if encoder.kind == "indicator" else math.log(bins)
    dist_mean, dist_var = pairwise_distance_stats(encoder, n_pairs, seed)
    es_pass, near_mean, far_mean = equal_similarity_test(encoder, n_pairs, seed)
    return PropertyReport(
        encoder=encoder.name,
        sample_size=n_samples,
        dimensionality=encoder.length,
        collision_rate=pair_rate,
        predicted_collision=predicted,
        per_dim_entropy_mean=float(entropies.mean()),
        max_entropy=max_h,
        distance_mean=dist_mean,
        distance_variance=dist_var,
        near_pair_distance=near_mean,
        far_pair_distance=far_mean,
        unique=(predicted < UNIQUENESS_EPS and pair_rate < UNIQUENESS_EPS),
        equal_similarity=es_pass,
        high_dimensional=(encoder.length >= HIGH_DIM_THRESHOLD
                          or encoder.dimension_configurable),
        high_entropy=bool(entropies.mean() >= ENTROPY_FRACTION * max_h),
    )


def standard_encoders(n: int, m: int, k: int, seed: int = 0) -> list[AnalyzerEncoder]:
    """The six encoder kinds of the verdict matrix, in canonical order."""
    return [
        OneHotFullEncoder(n),
        OneHotHashEncoder(n, m, seed=seed),
        DoubleOneHotHashEncoder(n, m, seed=seed),
        BinaryEncoder(n),
        IdentityEncoder(n),
        DenseHashAnalyzerEncoder(n, k, m, seed=seed),
    ]


def run_property_matrix(n: int = 10 ** 4, m: int = 10 ** 4, k: int = 64,
                        n_samples: int = 10 ** 5, seed: int = 0) -> list[PropertyReport]:
    return [property_report(e, n_samples=n_samples, seed=seed)
            for e in standard_encoders(n, m, k, seed=seed)]


def format_report_table(reports: list[PropertyReport]) -> str:
    mark = lambda b: "yes" if b else "no "
    lines = [f"{'encoder':<20} {'len':>7}  U    E-S  H-D  H-E  collision  entropy/max"]
    for r in reports:
        lines.append(
            f"{r.encoder:<20} {r.dimensionality:>7}  "
            f"{mark(r.unique)}  {mark(r.equal_similarity)}  "
            f"{mark(r.high_dimensional)}  {mark(r.high_entropy)}  "
            f"{r.collision_rate:9.2e}  {r.per_dim_entropy_mean:.3f}/{r.max_entropy:.3f}"
        )
    return "\n".join(lines)

"""The unified embedding-scheme interface and all seven schemes.

Every scheme maps an integer feature value to a d-dim embedding and exposes
batch embed / backward / adam_step plus an exact learnable-parameter count.
Table-based schemes hold their tables in a ParamStore; DHE holds a dense
hash encoder plus a deep embedding network and no table at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoders import DenseHashEncoderConfig, DomainError, dense_hash_encode_batch
from .hashing import ConfigError, hash_int_batch, make_hash_family
from .neuralnet import Mlp, MlpConfig, ParamStore, relu, relu_grad

SCHEME_KINDS = (
    "full", "hash_trick", "bloom", "hash_emb", "hybrid", "compositional", "dhe",
)

DEFAULT_BASELINE_K = 2       # hash functions for hashing-based baselines
DEFAULT_DHE_K = 1024
DEFAULT_DHE_M = 10 ** 6
DEFAULT_DHE_DEPTH = 5
DEFAULT_FREQUENT_FRACTION = 0.1
COMPOSITIONAL_HIDDEN = 64


class EmbeddingScheme:
    """Common surface: embed / backward / adam_step / param_count."""

    kind: str = ""

    def __init__(self, n: int, d: int, seed: int, dtype=np.float64):
        self.n = n
        self.d = d
        self.seed = seed
        self.dtype = dtype
        self.store = ParamStore()

    # -- interface ---------------------------------------------------------
    def embed_batch(self, xs: np.ndarray, mode: str = "infer"):
        raise NotImplementedError

    def backward(self, tape, gout: np.ndarray) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def embed(self, x: int) -> np.ndarray:
        emb, _ = self.embed_batch(np.array([int(x)]), mode="infer")
        return emb[0]

    def adam_step(self, grads: dict[str, np.ndarray], lr: float):
        self.store.adam_step(grads, lr)

    def param_count(self) -> int:
        return self.store.param_count()

    # -- checkpointing -----------------------------------------------------
    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        return self.store.state_arrays(prefix)

    def load_state(self, arrays, prefix: str = ""):
        self.store.load_state(arrays, prefix)

    def config_meta(self) -> dict:
        return {"kind": self.kind, "n": self.n, "d": self.d, "seed": self.seed}

    def _init_table(self, rng: np.random.Generator, rows: int) -> np.ndarray:
        return rng.normal(0.0, 0.1, size=(rows, self.d)).astype(self.dtype)


class FullEmbedding(EmbeddingScheme):
    """Dedicated row per value; no OOV handling."""

    kind = "full"

    def __init__(self, n, d, seed=0, dtype=np.float64):
        super().__init__(n, d, seed, dtype)
        rng = np.random.default_rng(seed)
        self.store.add("table", self._init_table(rng, n))

    def embed_batch(self, xs, mode="infer"):
        xs = np.asarray(xs, dtype=np.int64)
        if np.any(xs < 0) or np.any(xs >= self.n):
            raise DomainError("full embedding cannot handle out-of-vocab values")
        return self.store.params["table"][xs], xs

    def backward(self, tape, gout):
        g = np.zeros_like(self.store.params["table"])
        np.add.at(g, tape, gout.astype(self.dtype))
        return {"table": g}


class HashingTrick(EmbeddingScheme):
    """Single hash into an m-row table; collisions share rows."""

    kind = "hash_trick"

    def __init__(self, n, d, m, seed=0, dtype=np.float64):
        super().__init__(n, d, seed, dtype)
        self.m = m
        self.family = make_hash_family(seed, 1, m)
        rng = np.random.default_rng(seed)
        self.store.add("table", self._init_table(rng, m))

    def embed_batch(self, xs, mode="infer"):
        rows = hash_int_batch(self.family, xs)[:, 0].astype(np.int64)
        return self.store.params["table"][rows], rows

    def backward(self, tape, gout):
        g = np.zeros_like(self.store.params["table"])
        np.add.at(g, tape, gout.astype(self.dtype))
        return {"table": g}

    def config_meta(self):
        return {**super().config_meta(), "m": self.m}


class BloomEmbedding(EmbeddingScheme):
    """k hashes into one shared m-row table, rows summed ('add')."""

    kind = "bloom"

    def __init__(self, n, d, m, k=DEFAULT_BASELINE_K, seed=0, dtype=np.float64):
        super().__init__(n, d, seed, dtype)
        self.m = m
        self.k = k
        self.family = make_hash_family(seed, k, m)
        rng = np.random.default_rng(seed)
        # Scale the init by 1/sqrt(k) so the summed embedding's variance is
        # independent of the hash count.
        self.store.add("table",
                       (self._init_table(rng, m) / math.sqrt(k)).astype(dtype))

    def embed_batch(self, xs, mode="infer"):
        rows = hash_int_batch(self.family, xs).astype(np.int64)  # (N, k)
        emb = self.store.params["table"][rows].sum(axis=1)
        return emb, rows

    def backward(self, tape, gout):
        g = np.zeros_like(self.store.params["table"])
        gout = gout.astype(self.dtype)
        for j in range(self.k):
            np.add.at(g, tape[:, j], gout)
        return {"table": g}

    def config_meta(self):
        return {**super().config_meta(), "m": self.m, "k": self.k}


class HashEmbedding(EmbeddingScheme):
    """k lookups in a shared table combined with per-value learned weights.

    Weights are dedicated (one k-vector per in-vocab value, initialised to
    1/k); out-of-vocab values fall back to fixed uniform 1/k weights.
    """

    kind = "hash_emb"

    def __init__(self, n, d, m, k=DEFAULT_BASELINE_K, seed=0, dtype=np.float64):
        super().__init__(n, d, seed, dtype)
        self.m = m
        self.k = k
        self.family = make_hash_family(seed, k, m)
        rng = np.random.default_rng(seed)
        self.store.add("table", self._init_table(rng, m))
        self.store.add("weights", np.full((n, k), 1.0 / k, dtype=dtype))

    def embed_batch(self, xs, mode="infer"):
        xs = np.asarray(xs, dtype=np.int64)
        rows = hash_int_batch(self.family, xs).astype(np.int64)        # (N, k)
        looked = self.store.params["table"][rows]                      # (N, k, d)
        in_vocab = (xs >= 0) & (xs < self.n)
        w = np.full((len(xs), self.k), 1.0 / self.k, dtype=self.dtype)
        w[in_vocab] = self.store.params["weights"][xs[in_vocab]]
        emb = np.einsum("nk,nkd->nd", w, looked)
        return emb, (xs, rows, looked, w, in_vocab)

    def backward(self, tape, gout):
        xs, rows, looked, w, in_vocab = tape
        gout = gout.astype(self.dtype)
        gtable = np.zeros_like(self.store.params["table"])
        per_row = w[:, :, None] * gout[:, None, :]                     # (N, k, d)
        for j in range(self.k):
            np.add.at(gtable, rows[:, j], per_row[:, j])
        gweights = np.zeros_like(self.store.params["weights"])
        gw_local = np.einsum("nkd,nd->nk", looked, gout)
        np.add.at(gweights, xs[in_vocab], gw_local[in_vocab])
        return {"table": gtable, "weights": gweights}

    def config_meta(self):
        return {**super().config_meta(), "m": self.m, "k": self.k}


class HybridHashing(EmbeddingScheme):
    """Dedicated rows for the most frequent values, double hashing into a
    shared table for the rest. The frequent set is the top ceil(q*n) values
    by training frequency (ties broken by lower id)."""

    kind = "hybrid"

    def __init__(self, n, d, m, freq: np.ndarray | None = None,
                 q=DEFAULT_FREQUENT_FRACTION, k=DEFAULT_BASELINE_K,
                 seed=0, dtype=np.float64,
                 frequent_ids: np.ndarray | None = None):
        super().__init__(n, d, seed, dtype)
        self.m = m
        self.k = k
        self.q = q
        if frequent_ids is not None:
            # Restoring from a checkpoint: the frequent set is pinned.
            self.frequent_ids = np.asarray(frequent_ids, dtype=np.int64)
            n_freq = len(self.frequent_ids)
        else:
            if freq is None:
                freq = np.zeros(n)
            freq = np.asarray(freq, dtype=np.float64)
            if freq.shape != (n,):
                raise ConfigError(f"frequency table must have length n={n}")
            n_freq = math.ceil(q * n)
            order = np.lexsort((np.arange(n), -freq))
            self.frequent_ids = np.sort(order[:n_freq])
        self.dedic_index = np.full(n, -1, dtype=np.int64)
        self.dedic_index[self.frequent_ids] = np.arange(n_freq)
        self.family = make_hash_family(seed, k, m)
        rng = np.random.default_rng(seed)
        self.store.add("dedicated", self._init_table(rng, n_freq))
        self.store.add("table", self._init_table(rng, m))

    def embed_batch(self, xs, mode="infer"):
        xs = np.asarray(xs, dtype=np.int64)
        in_vocab = (xs >= 0) & (xs < self.n)
        dedic = np.full(len(xs), -1, dtype=np.int64)
        dedic[in_vocab] = self.dedic_index[xs[in_vocab]]
        is_dedic = dedic >= 0
        rows = hash_int_batch(self.family, xs).astype(np.int64)
        emb = self.store.params["table"][rows].sum(axis=1)
        emb[is_dedic] = self.store.params["dedicated"][dedic[is_dedic]]
        return emb, (dedic, is_dedic, rows)

    def backward(self, tape, gout):
        dedic, is_dedic, rows = tape
        gout = gout.astype(self.dtype)
        gdedic = np.zeros_like(self.store.params["dedicated"])
        np.add.at(gdedic, dedic[is_dedic], gout[is_dedic])
        gtable = np.zeros_like(self.store.params["table"])
        ghash = np.where(is_dedic[:, None], 0.0, gout).astype(self.dtype)
        for j in range(self.k):
            np.add.at(gtable, rows[:, j], ghash)
        return {"dedicated": gdedic, "table": gtable}

    def config_meta(self):
        return {**super().config_meta(), "m": self.m, "k": self.k, "q": self.q,
                "frequent_ids": self.frequent_ids.tolist()}


class CompositionalEmbedding(EmbeddingScheme):
    """Quotient-remainder split, path-based: look up the quotient row, then
    pass it through the remainder-indexed MLP (one hidden layer of 64 ReLU
    nodes, d -> d). In-vocab values only."""

    kind = "compositional"

    def __init__(self, n, d, m, seed=0, dtype=np.float64):
        super().__init__(n, d, seed, dtype)
        if m < 1:
            raise ConfigError("compositional embedding needs m >= 1")
        self.m = m
        self.q_rows = math.ceil(n / m)
        rng = np.random.default_rng(seed)
        hid = COMPOSITIONAL_HIDDEN
        self.store.add("quotient", self._init_table(rng, self.q_rows))
        sigma1 = np.sqrt(2.0 / d)
        sigma2 = np.sqrt(2.0 / hid)
        self.store.add("W1", rng.normal(0, sigma1, (m, d, hid)).astype(dtype))
        self.store.add("b1", np.zeros((m, hid), dtype=dtype))
        self.store.add("W2", rng.normal(0, sigma2, (m, hid, d)).astype(dtype))
        self.store.add("b2", np.zeros((m, d), dtype=dtype))

    def embed_batch(self, xs, mode="infer"):
        xs = np.asarray(xs, dtype=np.int64)
        if np.any(xs < 0) or np.any(xs >= self.n):
            raise DomainError("compositional embedding cannot handle out-of-vocab values")
        q, r = xs // self.m, xs % self.m
        p = self.store.params
        hq = p["quotient"][q]                                           # (N, d)
        z1 = np.einsum("nd,ndh->nh", hq, p["W1"][r]) + p["b1"][r]
        a1 = relu(z1)
        out = np.einsum("nh,nhd->nd", a1, p["W2"][r]) + p["b2"][r]
        return out, (q, r, hq, z1, a1)

    def backward(self, tape, gout):
        q, r, hq, z1, a1 = tape
        gout = gout.astype(self.dtype)
        p = self.store.params
        grads = {name: np.zeros_like(p[name]) for name in p}
        np.add.at(grads["b2"], r, gout)
        np.add.at(grads["W2"], r, a1[:, :, None] * gout[:, None, :])
        ga1 = np.einsum("nd,nhd->nh", gout, p["W2"][r])
        gz1 = ga1 * relu_grad(z1)
        np.add.at(grads["b1"], r, gz1)
        np.add.at(grads["W1"], r, hq[:, :, None] * gz1[:, None, :])
        ghq = np.einsum("nh,ndh->nd", gz1, p["W1"][r])
        np.add.at(grads["quotient"], q, ghq)
        return grads

    def config_meta(self):
        return {**super().config_meta(), "m": self.m}


class DHE(EmbeddingScheme):
    """Dense hash encoding decoded by a deep equal-width MLP; no tables.

    Optionally concatenates a per-value side-feature vector to the hash
    encoding (out-of-vocab values get a zero side vector).
    """

    kind = "dhe"

    def __init__(self, n, d, d_nn, k=DEFAULT_DHE_K, m=DEFAULT_DHE_M,
                 h=DEFAULT_DHE_DEPTH, activation="mish", batchnorm=True,
                 distribution="uniform", seed=0, hash_seed=None,
                 side_features: np.ndarray | None = None, dtype=np.float64):
        super().__init__(n, d, seed, dtype)
        self.k = k
        self.m = m
        self.h = h
        self.hash_seed = seed if hash_seed is None else hash_seed
        self.encoder = DenseHashEncoderConfig(
            family=make_hash_family(self.hash_seed, k, m),
            distribution=distribution,
        )
        self.side = None
        side_dim = 0
        if side_features is not None:
            self.side = np.asarray(side_features, dtype=dtype)
            side_dim = self.side.shape[1]
        self.mlp_config = MlpConfig(
            input_dim=k + side_dim, hidden_width=d_nn, hidden_layers=h,
            output_dim=d, activation=activation, batchnorm=batchnorm,
        )
        self.mlp = Mlp.from_config(self.mlp_config, seed=seed, dtype=dtype)
        self.store = self.mlp.store

    def encode_batch(self, xs) -> np.ndarray:
        enc = dense_hash_encode_batch(xs, self.encoder).astype(self.dtype)
        if self.side is not None:
            xs = np.asarray(xs, dtype=np.int64)
            side = np.zeros((len(xs), self.side.shape[1]), dtype=self.dtype)
            in_vocab = (xs >= 0) & (xs < self.n)
            side[in_vocab] = self.side[xs[in_vocab]]
            enc = np.concatenate([enc, side], axis=1)
        return enc

    def embed_batch(self, xs, mode="infer"):
        enc = self.encode_batch(xs)
        out, tape = self.mlp.forward(enc, mode=mode)
        return out, tape

    def backward(self, tape, gout):
        grads, _ = self.mlp.backward(tape, gout)
        return grads

    def config_meta(self):
        return {**super().config_meta(), "k": self.k, "m": self.m, "h": self.h,
                "d_nn": self.mlp_config.hidden_width,
                "activation": self.mlp_config.activation,
                "batchnorm": self.mlp_config.batchnorm,
                "distribution": self.encoder.distribution,
                "hash_seed": self.hash_seed}


# ---------------------------------------------------------------------------
# Parameter accounting and budget sizing
# ---------------------------------------------------------------------------

def expected_param_count(kind: str, n: int, d: int, *, m: int = 0, k: int = 0,
                         d_nn: int = 0, h: int = DEFAULT_DHE_DEPTH,
                         q: float = DEFAULT_FREQUENT_FRACTION,
                         batchnorm: bool = True) -> int:
    """Exact learnable-scalar count per scheme kind (biases and BN
    scale/shift included for the network-based kinds)."""
    if kind == "full":
        return n * d
    if kind == "hash_trick" or kind == "bloom":
        return m * d
    if kind == "hash_emb":
        return m * d + n * k
    if kind == "hybrid":
        return (math.ceil(q * n) + m) * d
    if kind == "compositional":
        hid = COMPOSITIONAL_HIDDEN
        return math.ceil(n / m) * d + m * (d * hid + hid + hid * d + d)
    if kind == "dhe":
        cfg = MlpConfig(k, d_nn, h, d, batchnorm=batchnorm)
        biases = h * d_nn + d
        bn = 2 * h * d_nn if batchnorm else 0
        return cfg.weight_count() + biases + bn
    raise ConfigError(f"unknown scheme kind {kind!r}")


def size_for_budget(kind: str, budget: int, n: int, d: int, *,
                    k: int | None = None, h: int = DEFAULT_DHE_DEPTH,
                    q: float = DEFAULT_FREQUENT_FRACTION,
                    batchnorm: bool = True) -> dict:
    """Largest capacity (m for table schemes, d_nn for DHE) whose exact
    param count fits the budget. Raises ConfigError when infeasible."""
    if kind == "full":
        if budget < n * d:
            raise ConfigError(f"budget {budget} below full size {n * d}")
        return {"rows": n}
    if kind in ("hash_trick", "bloom"):
        m = budget // d
        if m < 2:
            raise ConfigError(f"budget {budget} infeasible for {kind}")
        return {"m": m}
    if kind == "hash_emb":
        kk = k if k is not None else DEFAULT_BASELINE_K
        m = (budget - n * kk) // d
        if m < 2:
            raise ConfigError(f"budget {budget} infeasible for hash_emb")
        return {"m": m}
    if kind == "hybrid":
        m = budget // d - math.ceil(q * n)
        if m < 2:
            raise ConfigError(f"budget {budget} infeasible for hybrid")
        return {"m": m}
    if kind == "compositional":
        for m in range(n, 0, -1):
            if expected_param_count(kind, n, d, m=m) <= budget:
                return {"m": m}
        raise ConfigError(f"budget {budget} infeasible for compositional")
    if kind == "dhe":
        kk = k if k is not None else DEFAULT_DHE_K
        d_nn = 0
        while expected_param_count("dhe", n, d, k=kk, d_nn=d_nn + 1, h=h,
                                   batchnorm=batchnorm) <= budget:
            d_nn += 1
        if d_nn < 1:
            raise ConfigError(f"budget {budget} infeasible for dhe with k={kk}")
        return {"d_nn": d_nn}
    raise ConfigError(f"unknown scheme kind {kind!r}")


def build_scheme(kind: str, n: int, d: int, *, budget: int | None = None,
                 m: int | None = None, k: int | None = None, d_nn: int | None = None,
                 h: int = DEFAULT_DHE_DEPTH, q: float = DEFAULT_FREQUENT_FRACTION,
                 activation: str = "mish", batchnorm: bool = True,
                 distribution: str = "uniform", freq: np.ndarray | None = None,
                 side_features: np.ndarray | None = None,
                 seed: int = 0, dtype=np.float64) -> EmbeddingScheme:
    """Construct a scheme either from explicit capacity (m / d_nn) or from a
    parameter budget via size_for_budget."""
    if kind == "full":
        if budget is not None:
            size_for_budget("full", budget, n, d)
        return FullEmbedding(n, d, seed=seed, dtype=dtype)
    if budget is not None and (m is None and d_nn is None):
        sized = size_for_budget(kind, budget, n, d, k=k, h=h, q=q, batchnorm=batchnorm)
        m = sized.get("m", m)
        d_nn = sized.get("d_nn", d_nn)
    if kind == "hash_trick":
        return HashingTrick(n, d, m, seed=seed, dtype=dtype)
    if kind == "bloom":
        return BloomEmbedding(n, d, m, k=k or DEFAULT_BASELINE_K, seed=seed, dtype=dtype)
    if kind == "hash_emb":
        return HashEmbedding(n, d, m, k=k or DEFAULT_BASELINE_K, seed=seed, dtype=dtype)
    if kind == "hybrid":
        return HybridHashing(n, d, m, freq=freq, q=q, k=k or DEFAULT_BASELINE_K,
                             seed=seed, dtype=dtype)
    if kind == "compositional":
        return CompositionalEmbedding(n, d, m, seed=seed, dtype=dtype)
    if kind == "dhe":
        return DHE(n, d, d_nn, k=k or DEFAULT_DHE_K, m=m or DEFAULT_DHE_M,
                   h=h, activation=activation,
                   batchnorm=batchnorm, distribution=distribution,
                   side_features=side_features, seed=seed, dtype=dtype)
    raise ConfigError(f"unknown scheme kind {kind!r}")


def scheme_from_meta(meta: dict, dtype=np.float64) -> EmbeddingScheme:
    """Reconstruct an (uninitialised-weights) scheme from a checkpoint's
    config manifest; parameters are loaded separately via load_state."""
    kind, n, d, seed = meta["kind"], meta["n"], meta["d"], meta["seed"]
    if kind == "full":
        return FullEmbedding(n, d, seed=seed, dtype=dtype)
    if kind == "hash_trick":
        return HashingTrick(n, d, meta["m"], seed=seed, dtype=dtype)
    if kind == "bloom":
        return BloomEmbedding(n, d, meta["m"], k=meta["k"], seed=seed, dtype=dtype)
    if kind == "hash_emb":
        return HashEmbedding(n, d, meta["m"], k=meta["k"], seed=seed, dtype=dtype)
    if kind == "hybrid":
        return HybridHashing(n, d, meta["m"], q=meta["q"], k=meta["k"], seed=seed,
                             dtype=dtype, frequent_ids=np.asarray(meta["frequent_ids"]))
    if kind == "compositional":
        return CompositionalEmbedding(n, d, meta["m"], seed=seed, dtype=dtype)
    if kind == "dhe":
        return DHE(n, d, meta["d_nn"], k=meta["k"], m=meta["m"], h=meta["h"],
                   activation=meta["activation"], batchnorm=meta["batchnorm"],
                   distribution=meta["distribution"], seed=seed,
                   hash_seed=meta["hash_seed"], dtype=dtype)
    raise ConfigError(f"unknown scheme kind {kind!r}")

"""Frozen reference vectors with pinned seeds.

Each golden is recomputed from scratch by `compute()` and stored in the
shared length-prefixed float64 format, so `verify` catches any drift in
hashing, encoding, or network arithmetic. Values are bit-exact for a given
platform/BLAS build.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .encoders import DenseHashEncoderConfig, dense_hash_encode
from .hashing import hash_string, make_hash_family
from .neuralnet import Mlp
from .recmodels import MlpBackbone
from .schemes import DHE
from .serialize import read_f64_vector, write_f64_vector

DEFAULT_GOLDEN_DIR = Path(__file__).resolve().parents[2] / "goldens"


def _golden_hash_family():
    fam = make_hash_family(seed=0, k=8, m=1000)
    flat = []
    for t in fam.params:
        flat.extend([t.a, t.b, t.p])
    return np.array(flat, dtype=np.float64)


def _golden_dense_uniform():
    cfg = DenseHashEncoderConfig(make_hash_family(0, 1024, 10 ** 6), "uniform")
    return dense_hash_encode(12345, cfg).values


def _golden_dense_gaussian():
    cfg = DenseHashEncoderConfig(make_hash_family(0, 1024, 10 ** 6), "gaussian")
    return dense_hash_encode(12345, cfg).values


def _golden_mlp_forward():
    net = Mlp([8, 16, 16, 16, 4], activation="mish", batchnorm=True, seed=7)
    x = np.random.default_rng(11).normal(0, 1, (4, 8))
    out, _ = net.forward(x, mode="infer")
    return out.ravel()


def _golden_dhe_embed():
    scheme = DHE(n=10 ** 6, d=32, d_nn=64, k=1024, m=10 ** 6, h=5, seed=3)
    return scheme.embed(12345)


def _golden_backbone_logit():
    backbone = MlpBackbone(d=32, seed=5)
    rng = np.random.default_rng(13)
    u = rng.normal(0, 1, (3, 32))
    i = rng.normal(0, 1, (3, 32))
    logits, _ = backbone.score_batch(u, i)
    return logits


def _golden_string_hash():
    # Stored as exact (hi32, lo32) pairs: float64 holds 32-bit ints exactly.
    strings = ["", "a", "deep hash embedding", "movielens"]
    parts = []
    for s in strings:
        h = hash_string(s)
        parts.extend([h >> 32, h & 0xFFFFFFFF])
    return np.array(parts, dtype=np.float64)


GOLDENS = {
    "hash_family_seed0_k8_m1000": _golden_hash_family,
    "dense_encoding_uniform_x12345": _golden_dense_uniform,
    "dense_encoding_gaussian_x12345": _golden_dense_gaussian,
    "mlp_forward_seed7": _golden_mlp_forward,
    "dhe_embed_x12345": _golden_dhe_embed,
    "backbone_mlp_logits_seed5": _golden_backbone_logit,
    "string_hash_scaled": _golden_string_hash,
}


def regenerate(directory: str | Path = DEFAULT_GOLDEN_DIR) -> list[str]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, compute in GOLDENS.items():
        write_f64_vector(directory / f"{name}.bin", compute())
        written.append(name)
    return written


def verify(directory: str | Path = DEFAULT_GOLDEN_DIR) -> dict[str, bool]:
    directory = Path(directory)
    results = {}
    for name, compute in GOLDENS.items():
        path = directory / f"{name}.bin"
        if not path.exists():
            results[name] = False
            continue
        stored = read_f64_vector(path)
        fresh = np.asarray(compute(), dtype=np.float64).ravel()
        results[name] = stored.shape == fresh.shape and bool(
            np.array_equal(stored, fresh))
    return results

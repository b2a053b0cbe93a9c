"""Recommendation backbones (GMF and MLP), the training loss, and AUC.

The backbones use plain ReLU and no batch norm; Mish/BN belong to DHE's
embedding network only. Scores are logits; the logistic link lives in the
loss.
"""

from __future__ import annotations

import numpy as np

from .neuralnet import ContractError, Mlp

MLP_BACKBONE_HIDDEN = (256, 128, 64)


class GmfBackbone:
    """Weighted sum of the element-wise product of user and item embeddings.
    With all-ones weights and zero bias this is classic matrix factorization."""

    kind = "gmf"

    def __init__(self, d: int, dtype=np.float64):
        self.d = d
        self.dtype = dtype
        self.w = np.ones(d, dtype=dtype)
        self.bias = np.zeros(1, dtype=dtype)
        self._adam = {name: (np.zeros_like(arr), np.zeros_like(arr))
                      for name, arr in self._params().items()}
        self._step = 0

    def _params(self):
        return {"w": self.w, "bias": self.bias}

    def score_batch(self, u: np.ndarray, i: np.ndarray, mode="infer"):
        if u.shape != i.shape or u.shape[1] != self.d:
            raise ContractError(f"embedding shapes {u.shape} vs {i.shape} mismatch d={self.d}")
        prod = u * i
        return prod @ self.w + self.bias[0], prod

    def backward(self, tape, u, i, glogit):
        prod = tape
        grads = {
            "w": glogit @ prod,
            "bias": np.array([glogit.sum()], dtype=self.dtype),
        }
        gu = glogit[:, None] * (self.w[None, :] * i)
        gi = glogit[:, None] * (self.w[None, :] * u)
        return grads, gu, gi

    def adam_step(self, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
        self._step += 1
        t = self._step
        for name, arr in self._params().items():
            m, v = self._adam[name]
            g = grads[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            arr -= (lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)).astype(arr.dtype)

    def param_count(self):
        return self.d + 1

    def state_arrays(self, prefix=""):
        return {prefix + "w": self.w, prefix + "bias": self.bias}

    def load_state(self, arrays, prefix=""):
        self.w[...] = arrays[prefix + "w"]
        self.bias[...] = arrays[prefix + "bias"]


class MlpBackbone:
    """Fully-connected layers over [user; item] with hidden sizes
    (256, 128, 64) and a scalar output logit."""

    kind = "mlp"

    def __init__(self, d: int, seed: int = 0, hidden=MLP_BACKBONE_HIDDEN,
                 dtype=np.float64):
        self.d = d
        self.net = Mlp([2 * d, *hidden, 1], activation="relu", batchnorm=False,
                       seed=seed, dtype=dtype)

    def score_batch(self, u: np.ndarray, i: np.ndarray, mode="infer"):
        if u.shape != i.shape or u.shape[1] != self.d:
            raise ContractError(f"embedding shapes {u.shape} vs {i.shape} mismatch d={self.d}")
        x = np.concatenate([u, i], axis=1)
        out, tape = self.net.forward(x, mode="train")  # no BN, mode irrelevant
        return out[:, 0], tape

    def backward(self, tape, u, i, glogit):
        grads, gx = self.net.backward(tape, glogit[:, None])
        return grads, gx[:, : self.d], gx[:, self.d :]

    def adam_step(self, grads, lr):
        self.net.adam_step(grads, lr)

    def param_count(self):
        return self.net.param_count()

    def state_arrays(self, prefix=""):
        return self.net.store.state_arrays(prefix)

    def load_state(self, arrays, prefix=""):
        self.net.store.load_state(arrays, prefix)


def gmf_score(u: np.ndarray, i: np.ndarray, w: np.ndarray, bias: float = 0.0) -> float:
    """Logit for a single (user, item) pair: w . (u * i) + bias."""
    u = np.asarray(u, dtype=np.float64)
    i = np.asarray(i, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if u.shape != i.shape or u.shape != w.shape:
        raise ContractError("gmf_score requires matching u/i/w dims")
    return float(w @ (u * i) + bias)


def mlp_score(u: np.ndarray, i: np.ndarray, backbone: MlpBackbone) -> float:
    logit, _ = backbone.score_batch(np.asarray(u)[None, :], np.asarray(i)[None, :])
    return float(logit[0])


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x)))


def bce_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy in the stable log-sum-exp form."""
    x = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(np.maximum(x, 0) - x * y + np.log1p(np.exp(-np.abs(x)))))


def bce_loss(logits_pos: np.ndarray, logits_neg: np.ndarray) -> float:
    """Mean BCE with labels 1 for positives and 0 for sampled negatives."""
    pos = np.asarray(logits_pos, dtype=np.float64).ravel()
    neg = np.asarray(logits_neg, dtype=np.float64).ravel()
    if pos.size == 0:
        raise ContractError("bce_loss requires at least one positive")
    logits = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones_like(pos), np.zeros_like(neg)])
    return bce_logits(logits, labels)


def bce_grad(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """d(mean BCE)/d(logits) = (sigmoid(x) - y) / N."""
    x = np.asarray(logits, dtype=np.float64)
    return (sigmoid(x) - np.asarray(labels, dtype=np.float64)) / x.size


def auc(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Fraction of (pos, neg) pairs ranked correctly, ties counted 0.5.

    Computed exactly via the rank-sum identity with average ranks.
    """
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ContractError("auc requires non-empty positive and negative scores")
    from scipy.stats import rankdata

    ranks = rankdata(np.concatenate([pos, neg]))
    return float((ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0)
                 / (pos.size * neg.size))

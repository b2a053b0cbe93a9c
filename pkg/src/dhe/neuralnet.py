"""Minimal dense network engine: affine layers, ReLU/Mish, batch norm,
Adam and He-style init, with explicit forward tapes for backprop.

Gradient checks run in float64; training defaults to float32.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hashing import ConfigError

BN_EPS = 1e-5
BN_MOMENTUM = 0.9
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class ContractError(RuntimeError):
    """Shape / mode misuse that indicates a caller bug."""


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------

def softplus(x):
    x = np.asarray(x)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def mish(x):
    """x * tanh(softplus(x)), stable for |x| up to ~700."""
    return np.asarray(x) * np.tanh(softplus(x))


def mish_grad(x):
    x = np.asarray(x)
    t = np.tanh(softplus(x))
    sig = 1.0 / (1.0 + np.exp(-x))
    return t + x * (1.0 - t * t) * sig


def relu(x):
    return np.maximum(np.asarray(x), 0.0)


def relu_grad(x):
    return (np.asarray(x) > 0).astype(np.asarray(x).dtype)


_ACT = {"relu": (relu, relu_grad), "mish": (mish, mish_grad)}


# ---------------------------------------------------------------------------
# Config / parameter store
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MlpConfig:
    """Equal-width feedforward net: input -> h hidden layers of
    hidden_width -> output. Weight count (ex biases/BN) is
    input_dim*w + (h-1)*w^2 + w*output_dim."""

    input_dim: int
    hidden_width: int
    hidden_layers: int
    output_dim: int
    activation: str = "mish"
    batchnorm: bool = True

    def __post_init__(self):
        if min(self.input_dim, self.hidden_width, self.hidden_layers, self.output_dim) < 1:
            raise ConfigError("all MlpConfig dims must be >= 1")
        if self.activation not in _ACT:
            raise ConfigError(f"unknown activation {self.activation!r}")

    def dims(self) -> list[int]:
        return [self.input_dim] + [self.hidden_width] * self.hidden_layers + [self.output_dim]

    def weight_count(self) -> int:
        d = self.dims()
        return sum(a * b for a, b in zip(d[:-1], d[1:]))


def truncated_normal(rng: np.random.Generator, shape, sigma: float) -> np.ndarray:
    """N(0, sigma^2) truncated at +-2 sigma, by resampling."""
    out = rng.normal(0.0, sigma, size=shape)
    bad = np.abs(out) > 2.0 * sigma
    while np.any(bad):
        out[bad] = rng.normal(0.0, sigma, size=int(bad.sum()))
        bad = np.abs(out) > 2.0 * sigma
    return out


class ParamStore:
    """Named parameter arrays plus Adam moments and BN running stats."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.running: dict[str, np.ndarray] = {}  # BN running mean/var, not learnable
        self.adam_m: dict[str, np.ndarray] = {}
        self.adam_v: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value: np.ndarray):
        self.params[name] = value
        self.adam_m[name] = np.zeros_like(value)
        self.adam_v[name] = np.zeros_like(value)

    def param_count(self) -> int:
        return sum(v.size for v in self.params.values())

    def adam_step(self, grads: dict[str, np.ndarray], lr: float):
        """Standard Adam with bias correction; skips absent gradients."""
        self.step += 1
        t = self.step
        for name, g in grads.items():
            p = self.params[name]
            m = self.adam_m[name]
            v = self.adam_v[name]
            m *= ADAM_BETA1
            m += (1 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1 - ADAM_BETA2) * g * g
            mhat = m / (1 - ADAM_BETA1 ** t)
            vhat = v / (1 - ADAM_BETA2 ** t)
            p -= (lr * mhat / (np.sqrt(vhat) + ADAM_EPS)).astype(p.dtype)

    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {prefix + k: v for k, v in self.params.items()}
        out.update({prefix + "running/" + k: v for k, v in self.running.items()})
        return out

    def load_state(self, arrays: dict[str, np.ndarray], prefix: str = ""):
        for k in self.params:
            self.params[k][...] = arrays[prefix + k]
        for k in self.running:
            self.running[k][...] = arrays[prefix + "running/" + k]


def adam_step(store: ParamStore, grads: dict[str, np.ndarray], lr: float) -> ParamStore:
    store.adam_step(grads, lr)
    return store


# ---------------------------------------------------------------------------
# Batch normalization
# ---------------------------------------------------------------------------

def batchnorm_forward(x, gamma, beta, running_mean, running_var, mode):
    """Per-column standardization. Train mode uses batch statistics and
    updates running stats in place with momentum 0.9; infer mode uses the
    running stats. Returns (out, cache)."""
    if mode == "train":
        if x.shape[0] < 2:
            raise ContractError("batchnorm train mode requires batch size >= 2")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (x - mean) * inv_std
        running_mean *= BN_MOMENTUM
        running_mean += (1 - BN_MOMENTUM) * mean
        running_var *= BN_MOMENTUM
        running_var += (1 - BN_MOMENTUM) * var
        cache = (xhat, inv_std, gamma)
        return gamma * xhat + beta, cache
    if mode == "infer":
        inv_std = 1.0 / np.sqrt(running_var + BN_EPS)
        xhat = (x - running_mean) * inv_std
        return gamma * xhat + beta, (xhat, inv_std, gamma)
    raise ContractError(f"unknown batchnorm mode {mode!r}")


def batchnorm_backward(gout, cache):
    """Gradients for train-mode BN (through batch mean and variance)."""
    xhat, inv_std, gamma = cache
    n = xhat.shape[0]
    ggamma = (gout * xhat).sum(axis=0)
    gbeta = gout.sum(axis=0)
    gxhat = gout * gamma
    gx = (inv_std / n) * (
        n * gxhat - gxhat.sum(axis=0) - xhat * (gxhat * xhat).sum(axis=0)
    )
    return gx, ggamma, gbeta


# ---------------------------------------------------------------------------
# MLP
# ---------------------------------------------------------------------------

class Mlp:
    """Feedforward net over an explicit dims list. Hidden layers run
    affine -> BN (optional) -> activation; the output layer is affine only.

    `dims` may have unequal hidden widths (used by the recommendation
    backbone); DHE's embedding network uses the equal-width MlpConfig.
    """

    def __init__(self, dims, activation="mish", batchnorm=True, seed=0,
                 dtype=np.float64):
        if len(dims) < 2:
            raise ConfigError("need at least input and output dims")
        self.dims = list(dims)
        self.activation = activation
        self.batchnorm = batchnorm
        self.dtype = dtype
        self.n_hidden = len(dims) - 2
        self.store = init_params_for_dims(dims, activation, batchnorm, seed, dtype)

    @classmethod
    def from_config(cls, cfg: MlpConfig, seed=0, dtype=np.float64) -> "Mlp":
        return cls(cfg.dims(), cfg.activation, cfg.batchnorm, seed, dtype)

    def forward(self, x, mode="train"):
        """Returns (output, tape). x is (batch, input_dim)."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.dims[0]:
            raise ContractError(f"expected input shape (*, {self.dims[0]}), got {x.shape}")
        act, _ = _ACT[self.activation]
        p = self.store.params
        tape = {"inputs": [], "pre_act": [], "bn_caches": [], "mode": mode}
        h = x
        for i in range(self.n_hidden):
            tape["inputs"].append(h)
            z = h @ p[f"W{i}"] + p[f"b{i}"]
            if self.batchnorm:
                z, cache = batchnorm_forward(
                    z, p[f"gamma{i}"], p[f"beta{i}"],
                    self.store.running[f"mean{i}"], self.store.running[f"var{i}"],
                    mode,
                )
                tape["bn_caches"].append(cache)
            tape["pre_act"].append(z)
            h = act(z)
        i = self.n_hidden
        tape["inputs"].append(h)
        out = h @ p[f"W{i}"] + p[f"b{i}"]
        return out, tape

    def backward(self, tape, gout):
        """Returns (grads dict, input gradient). Requires a train-mode tape
        when batchnorm is enabled."""
        gout = np.asarray(gout, dtype=self.dtype)
        _, dact = _ACT[self.activation]
        p = self.store.params
        grads: dict[str, np.ndarray] = {}
        i = self.n_hidden
        h = tape["inputs"][i]
        grads[f"W{i}"] = h.T @ gout
        grads[f"b{i}"] = gout.sum(axis=0)
        g = gout @ p[f"W{i}"].T
        for i in range(self.n_hidden - 1, -1, -1):
            g = g * dact(tape["pre_act"][i])
            if self.batchnorm:
                if tape["mode"] == "train":
                    g, ggamma, gbeta = batchnorm_backward(g, tape["bn_caches"][i])
                else:
                    # Running stats are constants in infer mode.
                    xhat, inv_std, gamma = tape["bn_caches"][i]
                    ggamma = (g * xhat).sum(axis=0)
                    gbeta = g.sum(axis=0)
                    g = g * gamma * inv_std
                grads[f"gamma{i}"] = ggamma
                grads[f"beta{i}"] = gbeta
            x = tape["inputs"][i]
            grads[f"W{i}"] = x.T @ g
            grads[f"b{i}"] = g.sum(axis=0)
            g = g @ p[f"W{i}"].T
        return grads, g

    def adam_step(self, grads, lr):
        self.store.adam_step(grads, lr)

    def weight_count(self) -> int:
        return sum(self.store.params[f"W{i}"].size for i in range(self.n_hidden + 1))

    def param_count(self) -> int:
        return self.store.param_count()


# Standard deviation of a unit normal truncated at +-2; dividing the base
# sigma by this keeps the post-truncation variance at exactly 2/fan_in.
TRUNC_STD_CORRECTION = 0.87962566103423978


def init_params_for_dims(dims, activation, batchnorm, seed, dtype=np.float64) -> ParamStore:
    """He-style truncated normal weights (post-truncation variance
    2/fan_in, clipped at +-2 base sigma), zero biases, BN scale 1 / shift 0.
    Deterministic per seed."""
    rng = np.random.default_rng(seed)
    store = ParamStore()
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        sigma = np.sqrt(2.0 / fan_in) / TRUNC_STD_CORRECTION
        store.add(f"W{i}", truncated_normal(rng, (fan_in, fan_out), sigma).astype(dtype))
        store.add(f"b{i}", np.zeros(fan_out, dtype=dtype))
    if batchnorm:
        for i, width in enumerate(dims[1:-1]):
            store.add(f"gamma{i}", np.ones(width, dtype=dtype))
            store.add(f"beta{i}", np.zeros(width, dtype=dtype))
            store.running[f"mean{i}"] = np.zeros(width, dtype=dtype)
            store.running[f"var{i}"] = np.ones(width, dtype=dtype)
    return store


def init_params(cfg: MlpConfig, seed: int, dtype=np.float64) -> ParamStore:
    return init_params_for_dims(cfg.dims(), cfg.activation, cfg.batchnorm, seed, dtype)


def mlp_forward(cfg: MlpConfig, net: Mlp, batch, mode="train"):
    return net.forward(batch, mode)


# ---------------------------------------------------------------------------
# Finite-difference verification
# ---------------------------------------------------------------------------

def finite_difference_grads(loss_fn, arrays: dict[str, np.ndarray],
                            step: float = 1e-5) -> dict[str, np.ndarray]:
    """Central differences of loss_fn() w.r.t. each entry of each array.
    loss_fn reads the arrays in place; they are restored afterwards."""
    out = {}
    for name, arr in arrays.items():
        g = np.zeros_like(arr, dtype=np.float64)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = loss_fn()
            flat[j] = orig - step
            down = loss_fn()
            flat[j] = orig
            gflat[j] = (up - down) / (2 * step)
        out[name] = g
    return out


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """||a - b|| / max(||a||, ||b||); falls back to the absolute norm when
    both arrays are numerically zero (e.g. a bias whose true gradient
    vanishes because batch norm subtracts the mean)."""
    diff = float(np.linalg.norm((a - b).ravel()))
    denom = max(np.linalg.norm(a.ravel()), np.linalg.norm(b.ravel()))
    if denom < floor:
        return diff
    return diff / denom

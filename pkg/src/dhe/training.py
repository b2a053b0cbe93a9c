"""Training loop, sampled-AUC evaluation, benchmark orchestration across
schemes and budgets, and the embedding-generation timing probe.

Single-threaded runs are a deterministic function of (dataset, config,
seed). Benchmark cells can run in parallel processes (DHE_NUM_THREADS); the
aggregated result files contain no wall-clock fields so they stay
byte-identical across reruns.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .data import InteractionDataset, Split, split_leave_last_two
from .recmodels import GmfBackbone, MlpBackbone, auc, bce_logits, bce_grad
from .schemes import build_scheme, scheme_from_meta
from .serialize import save_checkpoint, load_checkpoint


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    scheme: str = "full"
    backbone: str = "gmf"          # "gmf" | "mlp"
    d: int = 32
    lr: float = 1e-3
    batch_size: int = 512
    epochs: int = 20
    negatives: int = 4             # sampled negatives per positive, per epoch
    eval_negatives: int = 100      # sampled unseen items per eval user
    seed: int = 0
    budget_fraction: float = 1.0   # of each side's full size n*d
    patience: int = 10             # early stop after this many stale epochs
    k: int | None = None           # hash-function count override
    h: int = 5                     # DHE embedding-network depth
    activation: str = "mish"       # DHE embedding network only
    batchnorm: bool = True         # DHE embedding network only
    dtype: str = "float32"

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class RunResult:
    config: dict
    config_digest: str
    seed: int
    epochs_run: int
    best_epoch: int
    train_losses: list[float]
    valid_aucs: list[float]
    test_auc: float
    param_counts: dict
    seconds_per_epoch: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        return cls(**d)


# ---------------------------------------------------------------------------
# Sampling helpers
# ---------------------------------------------------------------------------

def _interaction_keys(users, items, n_items):
    return np.sort(users.astype(np.int64) * n_items + items.astype(np.int64))


def sample_negatives(rng, users, n_items, forbidden_keys, count,
                     max_rounds: int = 1000):
    """count uniform negative items per user entry, excluding the user's
    known positives (resampled until clean). Raises if some user's history
    is so dense that rejection sampling cannot finish."""
    out = rng.integers(0, n_items, size=(len(users), count))
    bad = np.isin(users[:, None] * n_items + out, forbidden_keys)
    rounds = 0
    while bad.any():
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError(
                "negative sampling did not converge: some user has nearly "
                "the whole item catalogue as positives")
        resampled = rng.integers(0, n_items, size=int(bad.sum()))
        out[bad] = resampled
        bad_rows = np.unique(np.nonzero(bad)[0])
        bad[bad_rows] = np.isin(
            users[bad_rows, None] * n_items + out[bad_rows], forbidden_keys)
    return out


# ---------------------------------------------------------------------------
# Model assembly
# ---------------------------------------------------------------------------

def _build_backbone(cfg: TrainConfig, dtype):
    if cfg.backbone == "gmf":
        return GmfBackbone(cfg.d, dtype=dtype)
    if cfg.backbone == "mlp":
        return MlpBackbone(cfg.d, seed=cfg.seed + 7919, dtype=dtype)
    raise ValueError(f"unknown backbone {cfg.backbone!r}")


def build_model(ds: InteractionDataset, split: Split, cfg: TrainConfig):
    dtype = np.dtype(cfg.dtype).type
    budgets = {
        "user": int(round(cfg.budget_fraction * ds.n_users * cfg.d)),
        "item": int(round(cfg.budget_fraction * ds.n_items * cfg.d)),
    }
    common = dict(k=cfg.k, h=cfg.h, activation=cfg.activation,
                  batchnorm=cfg.batchnorm, dtype=dtype)
    user_scheme = build_scheme(cfg.scheme, ds.n_users, cfg.d,
                               budget=budgets["user"], freq=split.user_freq,
                               seed=cfg.seed * 2 + 1, **common)
    item_scheme = build_scheme(cfg.scheme, ds.n_items, cfg.d,
                               budget=budgets["item"], freq=split.item_freq,
                               seed=cfg.seed * 2 + 2, **common)
    backbone = _build_backbone(cfg, dtype)
    return user_scheme, item_scheme, backbone


def _embed_unique(scheme, ids, mode):
    uniq, inv = np.unique(ids, return_inverse=True)
    emb, tape = scheme.embed_batch(uniq, mode=mode)
    return emb, tape, uniq, inv


def _scatter_grad(scheme, tape, inv, uniq_len, d, grad_rows, lr):
    g = np.zeros((uniq_len, d), dtype=grad_rows.dtype)
    np.add.at(g, inv, grad_rows)
    grads = scheme.backward(tape, g)
    scheme.adam_step(grads, lr)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _score_pairs(backbone, uemb, iemb):
    logits, _ = backbone.score_batch(uemb, iemb, mode="infer")
    return logits


def evaluate_sampled_auc(user_scheme, item_scheme, backbone,
                         eval_users, eval_items, eval_negs):
    """Mean over users of P(positive ranked above a sampled negative),
    ties counted half. eval_negs is (n_users_eval, eval_negatives)."""
    cand = np.concatenate([eval_items[:, None], eval_negs], axis=1)  # (N, 1+neg)
    n, width = cand.shape
    uemb, _, uu, uinv = _embed_unique(user_scheme, eval_users, "infer")
    iu, iinv = np.unique(cand.ravel(), return_inverse=True)
    iemb_u, _ = item_scheme.embed_batch(iu, mode="infer")
    uemb_rows = uemb[uinv]                                    # (N, d)
    iemb_rows = iemb_u[iinv].reshape(n, width, -1)
    u_flat = np.repeat(uemb_rows, width, axis=0)
    logits = _score_pairs(backbone, u_flat, iemb_rows.reshape(n * width, -1))
    logits = logits.reshape(n, width)
    pos = logits[:, :1]
    neg = logits[:, 1:]
    per_user = ((neg < pos).mean(axis=1) + 0.5 * (neg == pos).mean(axis=1))
    return float(per_user.mean())


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def train(ds: InteractionDataset, cfg: TrainConfig, split: Split | None = None,
          return_model: bool = False):
    """Minibatch BCE with uniform negative sampling; per-epoch valid AUC;
    early stop after cfg.patience stale epochs; returns the best-valid
    checkpoint's test AUC."""
    if split is None:
        split = split_leave_last_two(ds)
    user_scheme, item_scheme, backbone = build_model(ds, split, cfg)
    rng = np.random.default_rng([cfg.seed, 0xD0E])
    eval_rng = np.random.default_rng([cfg.seed, 0xEA1])

    train_keys = _interaction_keys(split.train_users, split.train_items, ds.n_items)
    all_users = np.concatenate([split.train_users, split.valid_users, split.test_users])
    all_items = np.concatenate([split.train_items, split.valid_items, split.test_items])
    all_keys = _interaction_keys(all_users, all_items, ds.n_items)

    valid_negs = sample_negatives(eval_rng, split.valid_users, ds.n_items,
                                  all_keys, cfg.eval_negatives)
    test_negs = sample_negatives(eval_rng, split.test_users, ds.n_items,
                                 all_keys, cfg.eval_negatives)

    n_train = len(split.train_users)
    losses, valid_aucs, epoch_secs = [], [], []
    best_auc, best_epoch, best_state, stale = -1.0, -1, None, 0
    step = 0
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n_train)
        negs = sample_negatives(rng, split.train_users[order], ds.n_items,
                                train_keys, cfg.negatives)
        epoch_loss, n_batches = 0.0, 0
        for lo in range(0, n_train, cfg.batch_size):
            sel = order[lo : lo + cfg.batch_size]
            b = len(sel)
            u_b = split.train_users[sel]
            pos_i = split.train_items[sel]
            neg_i = negs[lo : lo + b]
            users_flat = np.concatenate([u_b, np.repeat(u_b, cfg.negatives)])
            items_flat = np.concatenate([pos_i, neg_i.ravel()])
            labels = np.concatenate([np.ones(b), np.zeros(b * cfg.negatives)])

            uemb, utape, uu, uinv = _embed_unique(user_scheme, users_flat, "train")
            iemb, itape, iu, iinv = _embed_unique(item_scheme, items_flat, "train")
            u_rows = uemb[uinv]
            i_rows = iemb[iinv]
            logits, btape = backbone.score_batch(u_rows, i_rows, mode="train")
            loss = bce_logits(logits, labels)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {step} "
                    f"(scheme={cfg.scheme}, backbone={cfg.backbone}, seed={cfg.seed})")
            glogit = bce_grad(logits, labels).astype(u_rows.dtype)
            bgrads, gu_rows, gi_rows = backbone.backward(btape, u_rows, i_rows, glogit)
            backbone.adam_step(bgrads, cfg.lr)
            _scatter_grad(user_scheme, utape, uinv, len(uu), cfg.d, gu_rows, cfg.lr)
            _scatter_grad(item_scheme, itape, iinv, len(iu), cfg.d, gi_rows, cfg.lr)
            epoch_loss += loss
            n_batches += 1
            step += 1
        losses.append(epoch_loss / max(n_batches, 1))
        v_auc = evaluate_sampled_auc(user_scheme, item_scheme, backbone,
                                     split.valid_users, split.valid_items, valid_negs)
        valid_aucs.append(v_auc)
        epoch_secs.append(time.perf_counter() - t0)
        if v_auc > best_auc:
            best_auc, best_epoch, stale = v_auc, epoch, 0
            best_state = {k: v.copy() for k, v in _model_state(
                user_scheme, item_scheme, backbone).items()}
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    if best_state is not None:
        _load_model_state(user_scheme, item_scheme, backbone, best_state)
    test_auc = evaluate_sampled_auc(user_scheme, item_scheme, backbone,
                                    split.test_users, split.test_items, test_negs)
    result = RunResult(
        config=cfg.to_dict(),
        config_digest=cfg.digest(),
        seed=cfg.seed,
        epochs_run=len(losses),
        best_epoch=best_epoch,
        train_losses=[float(x) for x in losses],
        valid_aucs=[float(x) for x in valid_aucs],
        test_auc=float(test_auc),
        param_counts={
            "user": user_scheme.param_count(),
            "item": item_scheme.param_count(),
            "backbone": backbone.param_count(),
        },
        seconds_per_epoch=[float(s) for s in epoch_secs],
    )
    if return_model:
        return result, (user_scheme, item_scheme, backbone)
    return result


def _model_state(user_scheme, item_scheme, backbone):
    state = user_scheme.state_arrays("user/")
    state.update(item_scheme.state_arrays("item/"))
    state.update(backbone.state_arrays("backbone/"))
    return state


def _load_model_state(user_scheme, item_scheme, backbone, state):
    user_scheme.load_state(state, "user/")
    item_scheme.load_state(state, "item/")
    backbone.load_state(state, "backbone/")


def save_model(path, user_scheme, item_scheme, backbone, cfg: TrainConfig):
    meta = {
        "user": user_scheme.config_meta(),
        "item": item_scheme.config_meta(),
        "backbone": {"kind": backbone.kind, "d": cfg.d,
                     "seed": cfg.seed + 7919},
        "train_config": cfg.to_dict(),
    }
    save_checkpoint(path, _model_state(user_scheme, item_scheme, backbone), meta)


def load_model(path):
    arrays, meta = load_checkpoint(path)
    cfg = TrainConfig(**meta["train_config"])
    dtype = np.dtype(cfg.dtype).type
    user_scheme = scheme_from_meta(meta["user"], dtype=dtype)
    item_scheme = scheme_from_meta(meta["item"], dtype=dtype)
    backbone = (GmfBackbone(cfg.d, dtype=dtype) if meta["backbone"]["kind"] == "gmf"
                else MlpBackbone(cfg.d, seed=meta["backbone"]["seed"], dtype=dtype))
    _load_model_state(user_scheme, item_scheme, backbone,
                      {k: v.astype(dtype) for k, v in arrays.items()})
    return user_scheme, item_scheme, backbone, cfg


# ---------------------------------------------------------------------------
# Benchmark orchestration
# ---------------------------------------------------------------------------

def _run_cell(args):
    ds, base_cfg, scheme, fraction, k, repeats, base_seed = args
    cell = {"scheme": scheme, "budget_fraction": fraction,
            "k": k if k is not None else 0}
    aucs, params = [], None
    try:
        for r in range(repeats):
            cfg = TrainConfig(**{**base_cfg.to_dict(),
                                 "scheme": scheme, "budget_fraction": fraction,
                                 "k": k, "seed": base_seed + r})
            res = train(ds, cfg)
            aucs.append(res.test_auc)
            params = sum(res.param_counts.values())
        cell.update(mean_auc=float(np.mean(aucs)),
                    std_auc=float(np.std(aucs)),
                    params=int(params), status="ok")
    except Exception as exc:  # record the failure, keep the sweep going
        cell.update(mean_auc=None, std_auc=None, params=None,
                    status=f"error: {exc}")
    return cell


def benchmark(ds: InteractionDataset, schemes: list[str],
              budget_fractions: list[float], repeats: int = 5,
              base_cfg: TrainConfig | None = None, base_seed: int = 0,
              k_values: list[int | None] | None = None,
              out_dir: str | Path | None = None) -> list[dict]:
    """Train every (scheme, budget, k) cell `repeats` times with distinct
    seeds; report mean/std test AUC and param counts; write CSV and JSON."""
    base_cfg = base_cfg or TrainConfig()
    k_values = k_values if k_values else [base_cfg.k]
    jobs = [(ds, base_cfg, s, f, k, repeats, base_seed)
            for s in schemes for f in budget_fractions for k in k_values]
    workers = int(os.environ.get("DHE_NUM_THREADS", "1"))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, jobs))
    else:
        cells = [_run_cell(j) for j in jobs]
    cells.sort(key=lambda c: (c["scheme"], c["budget_fraction"], c["k"]))
    if out_dir is not None:
        write_benchmark_results(out_dir, cells)
    return cells


def write_benchmark_results(out_dir: str | Path, cells: list[dict]) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "results.json", "w", encoding="utf-8") as f:
        json.dump(cells, f, sort_keys=True, indent=1)
        f.write("\n")
    with open(out_dir / "results.csv", "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=[
            "scheme", "budget_fraction", "k", "mean_auc", "std_auc",
            "params", "status"])
        writer.writeheader()
        for cell in cells:
            writer.writerow(cell)


# ---------------------------------------------------------------------------
# Timing probe
# ---------------------------------------------------------------------------

def timing_probe(scheme, n_queries: int, batch_size: int = 100) -> float:
    """Wall-clock seconds for embedding generation only (no training).
    Absolute values are machine-dependent: report, don't assert."""
    if n_queries <= 0:
        return 0.0
    ids = np.arange(batch_size, dtype=np.int64) % max(scheme.n, 1)
    t0 = time.perf_counter()
    done = 0
    while done < n_queries:
        b = min(batch_size, n_queries - done)
        scheme.embed_batch(ids[:b], mode="infer")
        done += b
    return time.perf_counter() - t0

"""Interaction datasets: ingestion, dense re-indexing, leave-last-two
splits, frequency tables, and deterministic synthetic generators.

Ratings are treated as implicit positive feedback. Users and items are
re-indexed densely to 0..n-1 (sorted raw-id order) with the index maps kept
on the dataset for persistence.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    pass


@dataclass
class InteractionDataset:
    users: np.ndarray        # dense user ids, int64
    items: np.ndarray        # dense item ids, int64
    timestamps: np.ndarray   # int64
    n_users: int
    n_items: int
    user_index: dict         # raw id -> dense id
    item_index: dict
    item_side: np.ndarray | None = None   # (n_items, side_dim) or None
    duplicates_dropped: int = 0

    def __post_init__(self):
        order = np.lexsort((self.timestamps, self.users))
        self.users = self.users[order]
        self.items = self.items[order]
        self.timestamps = self.timestamps[order]

    @property
    def n_actions(self) -> int:
        return len(self.users)


@dataclass
class Split:
    """Per-user leave-last-two split. Users with fewer than 3 interactions
    contribute to train only."""

    train_users: np.ndarray
    train_items: np.ndarray
    valid_users: np.ndarray
    valid_items: np.ndarray
    test_users: np.ndarray
    test_items: np.ndarray
    item_freq: np.ndarray = field(default=None)
    user_freq: np.ndarray = field(default=None)


def load_interactions(path: str | Path, format: str = "movielens_csv",
                      side_path: str | Path | None = None,
                      side_dim: int = 20) -> InteractionDataset:
    """Parse (user, item, timestamp) interactions.

    movielens_csv: comma-separated userId,movieId,rating,timestamp with an
    optional header row. tsv_triples: whitespace-separated user item
    timestamp. Duplicate (user, item, timestamp) rows are dropped with a
    warning count; malformed rows raise ParseError with the line number.
    """
    if format not in ("movielens_csv", "tsv_triples"):
        raise ParseError(f"unknown format {format!r}")
    raw_users, raw_items, stamps = [], [], []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",") if format == "movielens_csv" else line.split()
            if format == "movielens_csv":
                if lineno == 1 and not parts[0].strip().isdigit():
                    continue  # header
                if len(parts) != 4:
                    raise ParseError(f"{path}:{lineno}: expected 4 comma-separated fields")
                u, i, _rating, t = parts
            else:
                if len(parts) != 3:
                    raise ParseError(f"{path}:{lineno}: expected 3 whitespace-separated fields")
                u, i, t = parts
            try:
                raw_users.append(int(u))
                raw_items.append(int(i))
                stamps.append(int(float(t)))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not raw_users:
        raise ParseError(f"{path}: no interactions found")

    rows = np.stack([np.asarray(raw_users, dtype=np.int64),
                     np.asarray(raw_items, dtype=np.int64),
                     np.asarray(stamps, dtype=np.int64)], axis=1)
    unique_rows = np.unique(rows, axis=0)
    dropped = len(rows) - len(unique_rows)
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} duplicate (user,item,timestamp) rows")
    uniq_users, users = np.unique(unique_rows[:, 0], return_inverse=True)
    uniq_items, items = np.unique(unique_rows[:, 1], return_inverse=True)

    ds = InteractionDataset(
        users=users.astype(np.int64),
        items=items.astype(np.int64),
        timestamps=unique_rows[:, 2],
        n_users=len(uniq_users),
        n_items=len(uniq_items),
        user_index={int(r): i for i, r in enumerate(uniq_users)},
        item_index={int(r): i for i, r in enumerate(uniq_items)},
        duplicates_dropped=dropped,
    )
    if side_path is not None:
        ds.item_side = load_side_features(side_path, ds.item_index, side_dim)
    return ds


def load_side_features(path: str | Path, item_index: dict, dim: int) -> np.ndarray:
    """Sidecar CSV: raw_item_id, flag_0, ..., flag_{dim-1}. Items without a
    row get a zero vector."""
    side = np.zeros((len(item_index), dim))
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != dim + 1:
                raise ParseError(f"{path}:{lineno}: expected {dim + 1} fields")
            raw = int(parts[0])
            if raw in item_index:
                side[item_index[raw]] = [float(v) for v in parts[1:]]
    return side


def split_leave_last_two(ds: InteractionDataset) -> Split:
    """Per user (timestamp-sorted): all but last two -> train, second-to-last
    -> valid, last -> test. Short histories (< 3) go entirely to train."""
    train_idx, valid_idx, test_idx = [], [], []
    boundaries = np.flatnonzero(np.diff(ds.users)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(ds.users)]])
    for s, e in zip(starts, ends):
        if e - s >= 3:
            train_idx.extend(range(s, e - 2))
            valid_idx.append(e - 2)
            test_idx.append(e - 1)
        else:
            train_idx.extend(range(s, e))
    train_idx = np.asarray(train_idx, dtype=np.int64)
    valid_idx = np.asarray(valid_idx, dtype=np.int64)
    test_idx = np.asarray(test_idx, dtype=np.int64)
    split = Split(
        train_users=ds.users[train_idx], train_items=ds.items[train_idx],
        valid_users=ds.users[valid_idx], valid_items=ds.items[valid_idx],
        test_users=ds.users[test_idx], test_items=ds.items[test_idx],
    )
    split.item_freq = np.bincount(split.train_items, minlength=ds.n_items).astype(np.float64)
    split.user_freq = np.bincount(split.train_users, minlength=ds.n_users).astype(np.float64)
    return split


# ---------------------------------------------------------------------------
# Synthetic datasets
# ---------------------------------------------------------------------------

def make_synthetic_interactions(n_users: int = 943, n_items: int = 1682,
                                n_actions: int = 100_000, latent_dim: int = 4,
                                seed: int = 0) -> InteractionDataset:
    """MovieLens-100K-shaped stand-in: low-rank user/item preference
    structure plus a popularity skew, every user with >= 3 actions, items
    drawn per user without replacement."""
    rng = np.random.default_rng(seed)
    u_lat = rng.normal(0, 1, (n_users, latent_dim))
    i_lat = rng.normal(0, 1, (n_items, latent_dim))
    popularity = rng.gumbel(0, 1.0, n_items)
    logits = 1.5 * (u_lat @ i_lat.T) + popularity[None, :]
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)

    activity = rng.lognormal(0.0, 1.0, n_users)
    base = 3
    extra = n_actions - base * n_users
    if extra < 0:
        raise ValueError("n_actions too small for 3 actions per user")
    counts = base + rng.multinomial(extra, activity / activity.sum())
    # Cap per-user histories at half the catalogue so negative sampling
    # always has unseen items to draw from.
    counts = np.minimum(counts, n_items // 2)

    users, items = [], []
    for u in range(n_users):
        picked = rng.choice(n_items, size=int(counts[u]), replace=False, p=probs[u])
        users.append(np.full(len(picked), u, dtype=np.int64))
        items.append(picked.astype(np.int64))
    users = np.concatenate(users)
    items = np.concatenate(items)
    stamps = rng.integers(10 ** 6, 10 ** 9, size=len(users))
    return InteractionDataset(
        users=users, items=items, timestamps=stamps.astype(np.int64),
        n_users=n_users, n_items=n_items,
        user_index={u: u for u in range(n_users)},
        item_index={i: i for i in range(n_items)},
    )


def make_block_dataset(n_users: int = 50, n_items: int = 50, blocks: int = 5,
                       per_user: int = 10, seed: int = 0) -> InteractionDataset:
    """Block-diagonal dataset: users interact only with items of their own
    block, so the structure is learnable by low-rank factorization. With the
    defaults each user consumes their entire block, so every evaluation
    negative is out-of-block and a perfect block model scores AUC 1.0."""
    rng = np.random.default_rng(seed)
    users, items = [], []
    items_per_block = n_items // blocks
    for u in range(n_users):
        b = u % blocks
        pool = np.arange(b * items_per_block, (b + 1) * items_per_block)
        picked = rng.choice(pool, size=min(per_user, len(pool)), replace=False)
        users.append(np.full(len(picked), u, dtype=np.int64))
        items.append(picked.astype(np.int64))
    users = np.concatenate(users)
    items = np.concatenate(items)
    stamps = rng.integers(0, 10 ** 6, size=len(users)).astype(np.int64)
    return InteractionDataset(
        users=users, items=items, timestamps=stamps,
        n_users=n_users, n_items=n_items,
        user_index={u: u for u in range(n_users)},
        item_index={i: i for i in range(n_items)},
    )


def write_movielens_csv(path: str | Path, ds: InteractionDataset) -> None:
    """Write interactions in ratings.csv schema (rating fixed at 5.0)."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("userId,movieId,rating,timestamp\n")
        for u, i, t in zip(ds.users, ds.items, ds.timestamps):
            f.write(f"{u},{i},5.0,{t}\n")

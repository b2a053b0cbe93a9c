#!/usr/bin/env python3
"""Generate the desk-scale synthetic interaction dataset as a MovieLens-style
CSV (user,item,rating,timestamp). Defaults match the 943x1682 benchmark
dataset used by the acceptance suite."""

import argparse
from pathlib import Path

from dhe.data import make_synthetic_interactions, write_movielens_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/synthetic_100k.csv")
    ap.add_argument("--users", type=int, default=943)
    ap.add_argument("--items", type=int, default=1682)
    ap.add_argument("--actions", type=int, default=100_000)
    ap.add_argument("--latent-dim", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = make_synthetic_interactions(
        n_users=args.users, n_items=args.items, n_actions=args.actions,
        latent_dim=args.latent_dim, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_movielens_csv(out, ds)
    print(f"wrote {ds.n_actions} interactions "
          f"({ds.n_users} users x {ds.n_items} items) to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line surface: analyze, train, eval, benchmark, timing, goldens."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, goldens
from .data import load_interactions, split_leave_last_two
from .schemes import build_scheme
from .training import (TrainConfig, benchmark, load_model, save_model,
                       evaluate_sampled_auc, sample_negatives,
                       _interaction_keys, train, timing_probe)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _train_config(args, overrides: dict) -> TrainConfig:
    cfg = TrainConfig(**overrides)
    for name in ("scheme", "backbone", "seed", "budget_fraction", "k", "epochs"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    return cfg


def cmd_analyze(args):
    reports = analysis.run_property_matrix(
        n=args.n, m=args.m, k=args.k, n_samples=args.samples, seed=args.seed)
    print(analysis.format_report_table(reports))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w", encoding="utf-8") as f:
            json.dump([json.loads(r.to_json()) for r in reports], f,
                      sort_keys=True, indent=1)
            f.write("\n")
        print(f"wrote {out / 'report.json'}")
    return 0


def cmd_train(args):
    ds = load_interactions(args.dataset, format=args.format)
    cfg = _train_config(args, _load_config(args.config))
    split = split_leave_last_two(ds)
    result, model = train(ds, cfg, split=split, return_model=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "run.json", "w", encoding="utf-8") as f:
        json.dump(result.to_dict(), f, sort_keys=True, indent=1)
        f.write("\n")
    save_model(out / "checkpoint.bin", *model, cfg)
    with open(out / "index_maps.json", "w", encoding="utf-8") as f:
        json.dump({"users": ds.user_index, "items": ds.item_index}, f)
    print(f"test AUC {result.test_auc:.4f} "
          f"(best valid {max(result.valid_aucs):.4f} at epoch {result.best_epoch}); "
          f"wrote {out / 'run.json'}")
    return 0


def cmd_eval(args):
    ds = load_interactions(args.dataset, format=args.format)
    user_scheme, item_scheme, backbone, cfg = load_model(args.checkpoint)
    split = split_leave_last_two(ds)
    eval_rng = np.random.default_rng([cfg.seed, 0xEA1])
    all_keys = _interaction_keys(
        np.concatenate([split.train_users, split.valid_users, split.test_users]),
        np.concatenate([split.train_items, split.valid_items, split.test_items]),
        ds.n_items)
    # Same draw order as train(): valid negatives first, then test.
    sample_negatives(eval_rng, split.valid_users, ds.n_items, all_keys,
                     cfg.eval_negatives)
    test_negs = sample_negatives(eval_rng, split.test_users, ds.n_items,
                                 all_keys, cfg.eval_negatives)
    test_auc = evaluate_sampled_auc(user_scheme, item_scheme, backbone,
                                    split.test_users, split.test_items, test_negs)
    print(f"test AUC {test_auc:.4f}")
    return 0


def cmd_benchmark(args):
    ds = load_interactions(args.dataset, format=args.format)
    overrides = _load_config(args.config)
    base_cfg = TrainConfig(**overrides)
    if args.backbone:
        base_cfg.backbone = args.backbone
    if args.epochs is not None:
        base_cfg.epochs = args.epochs
    schemes = args.scheme.split(",")
    fractions = [float(x) for x in args.budget_fraction.split(",")]
    k_values = ([int(x) for x in args.k.split(",")] if args.k else None)
    cells = benchmark(ds, schemes, fractions, repeats=args.repeats,
                      base_cfg=base_cfg, base_seed=args.seed,
                      k_values=k_values, out_dir=args.out)
    for cell in cells:
        print(cell)
    print(f"wrote {Path(args.out) / 'results.csv'}")
    return 0


def cmd_timing(args):
    d_nn = args.d_nn if args.d_nn is not None else 64
    m = args.m
    if m is None and args.scheme != "dhe":
        m = args.n  # full-size table by default
    scheme = build_scheme(args.scheme, n=args.n, d=args.d,
                          m=m, d_nn=d_nn,
                          k=args.k, seed=args.seed, dtype=np.float32)
    secs = timing_probe(scheme, args.n_queries, args.batch_size)
    print(f"{args.scheme}: {secs:.3f} s for {args.n_queries} queries "
          f"(batch {args.batch_size})")
    return 0


def cmd_goldens(args):
    if args.action == "regenerate":
        written = goldens.regenerate(args.dir)
        print(f"regenerated {len(written)} goldens in {args.dir}")
        return 0
    results = goldens.verify(args.dir)
    for name, ok in sorted(results.items()):
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
    return 0 if all(results.values()) else 1


def _add_dataset_args(p):
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", default="movielens_csv",
                   choices=["movielens_csv", "tsv_triples"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhe", description="Deep hash embeddings: analysis and training harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="encoding property reports")
    p.add_argument("--n", type=int, default=10 ** 4)
    p.add_argument("--m", type=int, default=10 ** 4)
    p.add_argument("--k", type=int, default=64)
    p.add_argument("--samples", type=int, default=10 ** 5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train one configuration")
    _add_dataset_args(p)
    p.add_argument("--config", default=None, help="JSON TrainConfig overrides")
    p.add_argument("--scheme", default=None)
    p.add_argument("--backbone", default=None, choices=["gmf", "mlp"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget-fraction", dest="budget_fraction", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint's test AUC")
    _add_dataset_args(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchmark", help="sweep schemes x budgets x k")
    _add_dataset_args(p)
    p.add_argument("--config", default=None)
    p.add_argument("--scheme", default="full,hash_trick,dhe",
                   help="comma-separated scheme kinds")
    p.add_argument("--budget-fraction", dest="budget_fraction", default="1.0,0.5,0.25,0.125")
    p.add_argument("--k", default=None, help="comma-separated k sweep")
    p.add_argument("--backbone", default=None, choices=["gmf", "mlp"])
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("timing", help="embedding generation timing probe")
    p.add_argument("--scheme", default="dhe")
    p.add_argument("--n", type=int, default=10 ** 5)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--d-nn", dest="d_nn", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-queries", dest="n_queries", type=int, default=10 ** 6)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=100)
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("goldens", help="regenerate or verify golden files")
    p.add_argument("action", choices=["regenerate", "verify"])
    p.add_argument("--dir", default=str(goldens.DEFAULT_GOLDEN_DIR))
    p.set_defaults(func=cmd_goldens)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

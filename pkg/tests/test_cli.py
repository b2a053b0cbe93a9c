import json
import subprocess
import sys

import pytest

from dhe.cli import main
from dhe.data import make_block_dataset, write_movielens_csv


@pytest.fixture(scope="module")
def dataset_csv(tmp_path_factory):
    p = tmp_path_factory.mktemp("data") / "block.csv"
    write_movielens_csv(p, make_block_dataset())
    return str(p)


def test_entry_point_installed():
    out = subprocess.run([sys.executable, "-m", "dhe.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "analyze" in out.stdout and "goldens" in out.stdout


def test_analyze_writes_report(tmp_path, capsys):
    rc = main(["analyze", "--n", "200", "--m", "200", "--k", "8",
               "--samples", "2000", "--out", str(tmp_path)])
    assert rc == 0
    table = capsys.readouterr().out
    assert "dense_hash" in table
    report = json.loads((tmp_path / "report.json").read_text())
    assert len(report) == 6


def test_train_then_eval_roundtrip(tmp_path, dataset_csv, capsys):
    out = tmp_path / "run"
    rc = main(["train", "--dataset", dataset_csv, "--scheme", "full",
               "--backbone", "gmf", "--epochs", "2", "--seed", "0",
               "--config", _write_cfg(tmp_path, {"d": 8, "batch_size": 50}),
               "--out", str(out)])
    assert rc == 0
    train_line = capsys.readouterr().out
    run = json.loads((out / "run.json").read_text())
    assert (out / "checkpoint.bin").exists()
    assert (out / "index_maps.json").exists()

    rc = main(["eval", "--dataset", dataset_csv,
               "--checkpoint", str(out / "checkpoint.bin")])
    assert rc == 0
    eval_line = capsys.readouterr().out
    # The checkpoint holds the best-valid weights; its test AUC must match
    # the one the training run reported.
    assert f"test AUC {run['test_auc']:.4f}" in eval_line
    assert "test AUC" in train_line


def test_benchmark_outputs(tmp_path, dataset_csv, capsys):
    out = tmp_path / "bench"
    rc = main(["benchmark", "--dataset", dataset_csv,
               "--scheme", "full,hash_trick", "--budget-fraction", "1.0",
               "--repeats", "1", "--epochs", "1",
               "--config", _write_cfg(tmp_path, {"d": 8, "batch_size": 50}),
               "--out", str(out)])
    assert rc == 0
    cells = json.loads((out / "results.json").read_text())
    assert {c["scheme"] for c in cells} == {"full", "hash_trick"}
    assert (out / "results.csv").read_text().count("\n") == 3  # header + 2


def test_timing_runs(capsys):
    rc = main(["timing", "--scheme", "hash_trick", "--n", "1000",
               "--d", "8", "--n-queries", "1000"])
    assert rc == 0
    assert "hash_trick" in capsys.readouterr().out


def test_goldens_verify_roundtrip(tmp_path, capsys):
    rc = main(["goldens", "regenerate", "--dir", str(tmp_path)])
    assert rc == 0
    rc = main(["goldens", "verify", "--dir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out


def _write_cfg(tmp_path, overrides):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(overrides))
    return str(p)

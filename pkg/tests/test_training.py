import json

import numpy as np
import pytest

from dhe.data import make_block_dataset, make_synthetic_interactions, \
    split_leave_last_two
from dhe.hashing import ConfigError
from dhe.training import (RunResult, TrainConfig, benchmark, build_model,
                          evaluate_sampled_auc, load_model, sample_negatives,
                          save_model, timing_probe, train,
                          write_benchmark_results)


@pytest.fixture(scope="module")
def block_ds():
    return make_block_dataset()


@pytest.fixture(scope="module")
def small_ds():
    return make_synthetic_interactions(n_users=60, n_items=120,
                                       n_actions=2000, seed=0)


class TestConfig:
    def test_digest_stable(self):
        a = TrainConfig(scheme="full", backbone="gmf", seed=1)
        b = TrainConfig(scheme="full", backbone="gmf", seed=1)
        assert a.digest() == b.digest()

    def test_digest_sensitive_to_fields(self):
        a = TrainConfig(scheme="full", backbone="gmf", seed=1)
        b = TrainConfig(scheme="full", backbone="gmf", seed=2)
        assert a.digest() != b.digest()

    def test_invalid_scheme(self, block_ds):
        with pytest.raises((ConfigError, ValueError)):
            train(block_ds, TrainConfig(scheme="nope", backbone="gmf",
                                        epochs=1))

    def test_invalid_backbone(self, block_ds):
        with pytest.raises((ConfigError, ValueError)):
            train(block_ds, TrainConfig(scheme="full", backbone="cnn",
                                        epochs=1))


class TestNegativeSampling:
    def test_avoids_forbidden(self):
        rng = np.random.default_rng(0)
        users = np.zeros(50, dtype=np.int64)
        # user 0 has seen items 0..7 of 10.
        forbidden = np.arange(8, dtype=np.int64)
        out = sample_negatives(rng, users, 10, forbidden, 2)
        assert out.shape == (50, 2)
        assert np.all(out >= 8)

    def test_raises_when_impossible(self):
        rng = np.random.default_rng(0)
        users = np.zeros(4, dtype=np.int64)
        forbidden = np.arange(5, dtype=np.int64)  # all 5 items seen
        with pytest.raises(RuntimeError, match="negative sampling"):
            sample_negatives(rng, users, 5, forbidden, 1, max_rounds=5)

    def test_deterministic(self):
        users = np.arange(20, dtype=np.int64) % 3
        forbidden = np.array([0, 7, 14], dtype=np.int64)
        a = sample_negatives(np.random.default_rng(9), users, 7, forbidden, 4)
        b = sample_negatives(np.random.default_rng(9), users, 7, forbidden, 4)
        assert np.array_equal(a, b)


class TestTrain:
    def test_block_dataset_full_gmf(self, block_ds):
        cfg = TrainConfig(scheme="full", backbone="gmf", d=8, lr=0.01,
                          batch_size=50, epochs=200, seed=0)
        res = train(block_ds, cfg)
        assert res.test_auc >= 0.95

    def test_untrained_model_is_random(self):
        # Enough eval users that the sampled-AUC standard error (~0.29/sqrt(N))
        # sits well inside the +/-0.02 band.
        ds = make_synthetic_interactions(n_users=943, n_items=800,
                                         n_actions=30_000, seed=0)
        cfg = TrainConfig(scheme="full", backbone="gmf", d=8, epochs=0, seed=0)
        res = train(ds, cfg)
        assert res.test_auc == pytest.approx(0.5, abs=0.02)

    def test_determinism_digest(self, block_ds):
        cfg = TrainConfig(scheme="dhe", backbone="gmf", d=8, k=32, lr=0.01,
                          batch_size=50, epochs=3, seed=3)
        r1 = train(block_ds, cfg)
        r2 = train(block_ds, cfg)
        assert r1.config_digest == r2.config_digest
        assert r1.valid_aucs == r2.valid_aucs
        assert r1.train_losses == r2.train_losses
        assert r1.test_auc == r2.test_auc

    def test_early_stopping_records_best(self, block_ds):
        cfg = TrainConfig(scheme="full", backbone="gmf", d=8, lr=0.01,
                          batch_size=50, epochs=200, patience=5, seed=0)
        res = train(block_ds, cfg)
        assert res.epochs_run <= 200
        assert res.best_epoch == int(np.argmax(res.valid_aucs))

    def test_result_dict_roundtrip(self, block_ds):
        cfg = TrainConfig(scheme="full", backbone="gmf", d=8, epochs=2, seed=0)
        res = train(block_ds, cfg)
        parsed = json.loads(json.dumps(res.to_dict()))
        assert RunResult.from_dict(parsed) == res
        assert parsed["config"]["scheme"] == "full"


class TestCheckpoint:
    def test_save_load_roundtrip(self, block_ds, tmp_path):
        cfg = TrainConfig(scheme="dhe", backbone="mlp", d=8, k=32, epochs=2,
                          batch_size=50, seed=1)
        split = split_leave_last_two(block_ds)
        _, (us, its, bb) = train(block_ds, cfg, split=split, return_model=True)
        p = tmp_path / "ckpt.bin"
        save_model(p, us, its, bb, cfg)
        rus, rits, rbb, rcfg = load_model(p)
        assert rcfg == cfg
        eval_rng = np.random.default_rng([cfg.seed, 0xEA1])
        negs = eval_rng.integers(0, block_ds.n_items,
                                 size=(len(split.test_users), 10))
        a = evaluate_sampled_auc(us, its, bb,
                                 split.test_users, split.test_items, negs)
        b = evaluate_sampled_auc(rus, rits, rbb,
                                 split.test_users, split.test_items, negs)
        assert a == b

    def test_all_schemes_roundtrip(self, block_ds, tmp_path):
        # Compositional's per-remainder MLP needs a budget above the tiny
        # block dataset's full size, so it gets a larger fraction.
        fractions = {"full": 1.0, "compositional": 5.0}
        for scheme in ("full", "hash_trick", "bloom", "hash_emb", "hybrid",
                       "compositional", "dhe"):
            cfg = TrainConfig(scheme=scheme, backbone="gmf", d=8, k=2,
                              epochs=1, batch_size=50, seed=0,
                              budget_fraction=fractions.get(scheme, 0.9))
            _, (us, its, bb) = train(block_ds, cfg, return_model=True)
            p = tmp_path / f"{scheme}.bin"
            save_model(p, us, its, bb, cfg)
            _, rits, _, _ = load_model(p)
            ids = np.arange(min(10, block_ds.n_items))
            assert np.array_equal(its.embed_batch(ids, mode="infer")[0],
                                  rits.embed_batch(ids, mode="infer")[0])


class TestBenchmark:
    def test_matrix_shape_and_budgets(self, block_ds, tmp_path):
        base = TrainConfig(scheme="full", backbone="gmf", d=8, epochs=1,
                           batch_size=50)
        cells = benchmark(block_ds, schemes=["full", "hash_trick"],
                          budget_fractions=[1.0, 0.5], repeats=1,
                          base_cfg=base)
        assert len(cells) == 4
        full_budget = (block_ds.n_users + block_ds.n_items) * 8
        for c in cells:
            if c["scheme"] == "full" and c["budget_fraction"] < 1.0:
                # The uncompressed table cannot shrink below its full size.
                assert c["status"].startswith("error")
                continue
            assert c["status"] == "ok"
            emb_params = c["params"] - 9  # GMF backbone: w (8) + bias (1)
            assert emb_params <= full_budget * c["budget_fraction"] + 1e-9

        write_benchmark_results(tmp_path / "bench", cells)
        data = json.loads((tmp_path / "bench" / "results.json").read_text())
        assert len(data) == 4
        csv_text = (tmp_path / "bench" / "results.csv").read_text()
        assert csv_text.startswith("scheme,")

    def test_byte_identical_reruns(self, block_ds, tmp_path):
        base = TrainConfig(scheme="full", backbone="gmf", d=8, epochs=2,
                           batch_size=50)
        blobs = []
        for i in range(2):
            cells = benchmark(block_ds, schemes=["full", "dhe"],
                              budget_fractions=[0.5], repeats=2,
                              base_cfg=base, out_dir=tmp_path / f"run{i}")
            assert cells
            blobs.append((tmp_path / f"run{i}" / "results.json").read_bytes())
        assert blobs[0] == blobs[1]

    def test_infeasible_cell_reports_error(self, block_ds):
        base = TrainConfig(scheme="full", backbone="gmf", d=8, epochs=1,
                           batch_size=50)
        cells = benchmark(block_ds, schemes=["full"],
                          budget_fractions=[1e-6], repeats=1, base_cfg=base)
        assert cells[0]["status"].startswith("error")
        assert cells[0]["mean_auc"] is None


class TestTiming:
    def test_zero_queries(self, block_ds):
        split = split_leave_last_two(block_ds)
        us, _, _ = build_model(block_ds, split,
                               TrainConfig(scheme="full", backbone="gmf", d=8))
        assert timing_probe(us, n_queries=0) == 0.0

    def test_reports_positive_time(self, block_ds):
        split = split_leave_last_two(block_ds)
        _, its, _ = build_model(block_ds, split,
                                TrainConfig(scheme="dhe", backbone="gmf",
                                            d=8, k=16))
        assert timing_probe(its, n_queries=500) > 0.0

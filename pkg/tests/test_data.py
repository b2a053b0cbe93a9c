import numpy as np
import pytest

from dhe.data import (InteractionDataset, ParseError, load_interactions,
                      load_side_features, make_block_dataset,
                      make_synthetic_interactions, split_leave_last_two,
                      write_movielens_csv)


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestMovielensCsv:
    def test_header_optional(self, tmp_path):
        body = "1,10,5.0,100\n1,11,4.0,200\n2,10,3.0,50\n"
        with_header = load_interactions(
            _write(tmp_path, "a.csv", "userId,movieId,rating,timestamp\n" + body))
        without = load_interactions(_write(tmp_path, "b.csv", body))
        assert with_header.n_actions == without.n_actions == 3

    def test_dense_reindex(self, tmp_path):
        ds = load_interactions(_write(
            tmp_path, "a.csv", "7,100,5.0,1\n7,200,5.0,2\n9,100,5.0,3\n"))
        assert ds.n_users == 2 and ds.n_items == 2
        assert ds.user_index == {7: 0, 9: 1}
        assert ds.item_index == {100: 0, 200: 1}

    def test_sorted_by_user_then_time(self, tmp_path):
        ds = load_interactions(_write(
            tmp_path, "a.csv", "2,1,5.0,9\n1,2,5.0,5\n1,1,5.0,3\n"))
        assert list(ds.users) == [0, 0, 1]
        assert list(ds.timestamps) == [3, 5, 9]

    def test_duplicates_dropped_with_count(self, tmp_path):
        p = _write(tmp_path, "a.csv", "1,1,5.0,10\n1,1,4.0,10\n1,2,5.0,20\n")
        with pytest.warns(UserWarning, match="duplicate"):
            ds = load_interactions(p)
        assert ds.n_actions == 2 and ds.duplicates_dropped == 1

    def test_malformed_row_lineno(self, tmp_path):
        p = _write(tmp_path, "a.csv", "1,1,5.0,10\n1,2,oops\n")
        with pytest.raises(ParseError, match=":2"):
            load_interactions(p)

    def test_empty_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_interactions(_write(tmp_path, "a.csv", "\n"))

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ParseError):
            load_interactions(_write(tmp_path, "a.csv", "1,1,5.0,1\n"), format="xml")


class TestTsvTriples:
    def test_parse(self, tmp_path):
        ds = load_interactions(_write(tmp_path, "a.tsv", "1 10 100\n2 11 50\n"),
                               format="tsv_triples")
        assert ds.n_actions == 2

    def test_field_count(self, tmp_path):
        with pytest.raises(ParseError, match=":1"):
            load_interactions(_write(tmp_path, "a.tsv", "1 10\n"),
                              format="tsv_triples")


class TestSideFeatures:
    def test_twenty_dim_sidecar(self, tmp_path):
        flags = ",".join(["1"] + ["0"] * 19)
        p = _write(tmp_path, "g.csv", f"100,{flags}\n")
        side = load_side_features(p, {100: 0, 200: 1}, dim=20)
        assert side.shape == (2, 20)
        assert side[0, 0] == 1.0
        assert np.all(side[1] == 0.0)  # missing item -> zeros

    def test_wrong_width(self, tmp_path):
        p = _write(tmp_path, "g.csv", "100,1,0\n")
        with pytest.raises(ParseError):
            load_side_features(p, {100: 0}, dim=20)


class TestSplit:
    def test_leave_last_two(self, tmp_path):
        ds = load_interactions(_write(
            tmp_path, "a.csv",
            "1,1,5,10\n1,2,5,20\n1,3,5,30\n1,4,5,40\n"   # user 1: 4 actions
            "2,1,5,10\n2,2,5,20\n"))                      # user 2: 2 actions
        sp = split_leave_last_two(ds)
        assert len(sp.valid_users) == 1 and len(sp.test_users) == 1
        assert sp.valid_items[0] == ds.item_index[3]
        assert sp.test_items[0] == ds.item_index[4]
        # Short-history user contributes to train only.
        assert (sp.train_users == 1).sum() == 2

    def test_exactly_one_eval_row_per_qualifying_user(self):
        ds = make_synthetic_interactions(n_users=50, n_items=100,
                                         n_actions=1000, seed=0)
        sp = split_leave_last_two(ds)
        assert len(sp.valid_users) == 50 == len(sp.test_users)
        assert len(np.unique(sp.valid_users)) == 50

    def test_frequency_tables(self):
        ds = make_block_dataset()
        sp = split_leave_last_two(ds)
        assert sp.item_freq.sum() == len(sp.train_users)
        assert sp.user_freq.shape == (ds.n_users,)


class TestSynthetic:
    def test_movielens_shape(self):
        ds = make_synthetic_interactions(seed=0)
        assert ds.n_users == 943 and ds.n_items == 1682
        assert 90_000 <= ds.n_actions <= 100_000
        counts = np.bincount(ds.users, minlength=943)
        assert counts.min() >= 3
        assert counts.max() <= 1682 // 2

    def test_deterministic(self):
        a = make_synthetic_interactions(n_users=30, n_items=60, n_actions=500, seed=1)
        b = make_synthetic_interactions(n_users=30, n_items=60, n_actions=500, seed=1)
        assert np.array_equal(a.users, b.users) and np.array_equal(a.items, b.items)

    def test_no_duplicate_user_item(self):
        ds = make_synthetic_interactions(n_users=30, n_items=60, n_actions=500, seed=2)
        pairs = ds.users * ds.n_items + ds.items
        assert len(np.unique(pairs)) == len(pairs)

    def test_csv_roundtrip(self, tmp_path):
        ds = make_synthetic_interactions(n_users=20, n_items=40, n_actions=200, seed=3)
        p = tmp_path / "ml.csv"
        write_movielens_csv(p, ds)
        loaded = load_interactions(p)
        assert loaded.n_actions == ds.n_actions
        assert loaded.n_users == ds.n_users

    def test_block_dataset_structure(self):
        ds = make_block_dataset(n_users=20, n_items=20, blocks=4, per_user=5)
        per_block = 20 // 4
        for u, i in zip(ds.users, ds.items):
            assert i // per_block == u % 4

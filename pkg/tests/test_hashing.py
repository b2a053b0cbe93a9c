import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dhe.hashing import (ConfigError, HashFamily, SplitMix64,
                         UniversalHashParams, hash_int, hash_int_batch,
                         hash_string, make_hash_family, primes_above)


class TestUniversalHashParams:
    def test_hand_arithmetic(self):
        # ((3*4 + 7) mod 11) mod 5 = (19 mod 11) mod 5 = 8 mod 5 = 3
        p = UniversalHashParams(a=3, b=7, p=11, m=5)
        assert hash_int(p, 4) == 3

    def test_p_must_exceed_m(self):
        with pytest.raises(ConfigError):
            UniversalHashParams(a=1, b=1, p=5, m=5)

    def test_a_nonzero_mod_p(self):
        with pytest.raises(ConfigError):
            UniversalHashParams(a=11, b=1, p=11, m=5)

    def test_b_nonzero(self):
        with pytest.raises(ConfigError):
            UniversalHashParams(a=3, b=0, p=11, m=5)


class TestMakeHashFamily:
    def test_family_shape_and_primes(self):
        fam = make_hash_family(seed=0, k=1024, m=10 ** 6)
        assert fam.k == 1024 and len(fam.params) == 1024
        for t in fam.params:
            assert t.p > 10 ** 6
            assert 1 <= t.a < t.p
            assert 1 <= t.b < t.p

    def test_deterministic(self):
        f1 = make_hash_family(3, 16, 1000)
        f2 = make_hash_family(3, 16, 1000)
        assert f1.params == f2.params

    def test_distinct_triples(self):
        fam = make_hash_family(0, 256, 100)
        triples = {(t.a, t.b, t.p) for t in fam.params}
        assert len(triples) == 256

    def test_seed_changes_family(self):
        assert make_hash_family(0, 4, 100).params != make_hash_family(1, 4, 100).params

    def test_invalid_args(self):
        with pytest.raises(ConfigError):
            make_hash_family(0, 0, 100)
        with pytest.raises(ConfigError):
            make_hash_family(0, 4, 1)


class TestHashIntBatch:
    def test_matches_scalar(self):
        fam = make_hash_family(0, 8, 1000)
        xs = np.arange(200, dtype=np.int64)
        batch = hash_int_batch(fam, xs)
        for x in (0, 1, 57, 199):
            assert list(batch[x].astype(int)) == [hash_int(t, x) for t in fam.params]

    def test_range(self):
        fam = make_hash_family(1, 4, 37)
        batch = hash_int_batch(fam, np.arange(5000))
        assert batch.min() >= 0 and batch.max() < 37

    def test_large_inputs_no_overflow(self):
        fam = make_hash_family(2, 4, 10 ** 6)
        xs = np.array([2 ** 62, 2 ** 63 - 1], dtype=np.uint64)
        batch = hash_int_batch(fam, xs)
        for j, t in enumerate(fam.params):
            assert int(batch[0, j]) == hash_int(t, 2 ** 62)
            assert int(batch[1, j]) == hash_int(t, 2 ** 63 - 1)

    def test_uniformity_chi_square(self):
        # At m = 10^6 the prime p exceeds m by only a few units, so the
        # folding bias is negligible; coarse-bin the buckets and chi-square.
        from scipy.stats import chisquare
        m = 10 ** 6
        fam = make_hash_family(0, 1, m)
        buckets = hash_int_batch(fam, np.arange(10 ** 5))[:, 0].astype(np.int64)
        coarse = np.bincount(buckets // (m // 100), minlength=100)
        assert chisquare(coarse).pvalue > 0.01

    def test_pairwise_collision_frequency(self):
        # For a fixed pair x != y, over many families the collision
        # frequency is <= 2/m within 3 standard errors.
        m, trials = 50, 10 ** 4
        x, y = 123, 456
        hits = 0
        for s in range(trials):
            fam = make_hash_family(s, 1, m)
            t = fam.params[0]
            hits += hash_int(t, x) == hash_int(t, y)
        rate = hits / trials
        bound = 2.0 / m
        se = np.sqrt(bound * (1 - bound) / trials)
        assert rate <= bound + 3 * se


class TestPrimesAbove:
    def test_first_primes(self):
        assert primes_above(10, 4) == (11, 13, 17, 19)

    def test_all_above_m(self):
        assert all(p > 10 ** 6 for p in primes_above(10 ** 6))


class TestSplitMix64:
    def test_known_sequence_deterministic(self):
        g1, g2 = SplitMix64(42), SplitMix64(42)
        assert [g1.next_u64() for _ in range(5)] == [g2.next_u64() for _ in range(5)]

    def test_bounded(self):
        g = SplitMix64(7)
        assert all(0 <= g.next_below(13) < 13 for _ in range(100))


class TestHashString:
    def test_empty_string_constant(self):
        assert hash_string("") == 14695981039346656037

    def test_distinct_digests(self):
        digests = {hash_string(f"feature-{i}") for i in range(10 ** 5)}
        assert len(digests) == 10 ** 5

    def test_bytes_and_str_agree(self):
        assert hash_string("abc") == hash_string(b"abc")

    def test_64_bit(self):
        assert 0 <= hash_string("deep hash embedding") < 2 ** 64


@given(st.integers(min_value=0, max_value=2 ** 63 - 1),
       st.integers(min_value=0, max_value=2 ** 31),
       st.integers(min_value=2, max_value=10 ** 6))
@settings(max_examples=50, deadline=None)
def test_hash_always_in_range(x, seed, m):
    fam = make_hash_family(seed, 2, m)
    for t in fam.params:
        assert 0 <= hash_int(t, x) < m


@given(st.integers(min_value=0, max_value=10 ** 9))
@settings(max_examples=50, deadline=None)
def test_batch_matches_scalar_property(x):
    fam = make_hash_family(5, 3, 997)
    batch = hash_int_batch(fam, np.array([x]))[0]
    assert list(batch.astype(int)) == [hash_int(t, x) for t in fam.params]

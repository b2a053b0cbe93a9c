import numpy as np
import pytest

from dhe.goldens import DEFAULT_GOLDEN_DIR, GOLDENS, regenerate, verify
from dhe.serialize import read_f64_vector, write_f64_vector


def test_repo_goldens_exist_and_verify():
    assert DEFAULT_GOLDEN_DIR.is_dir(), "goldens/ missing; run `dhe goldens regenerate`"
    results = verify()
    assert results and all(results.values()), {
        k: v for k, v in results.items() if not v}


def test_regenerate_is_idempotent(tmp_path):
    regenerate(tmp_path)
    before = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    regenerate(tmp_path)
    after = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert before == after


def test_verify_flags_missing_and_corrupt(tmp_path):
    regenerate(tmp_path)
    name = next(iter(GOLDENS))
    path = tmp_path / f"{name}.bin"
    vec = read_f64_vector(path)
    vec[0] += 1.0
    write_f64_vector(path, vec)
    results = verify(tmp_path)
    assert results[name] is False
    path.unlink()
    assert verify(tmp_path)[name] is False


def test_string_hash_golden_holds_exact_halves():
    vals = GOLDENS["string_hash_scaled"]()
    # (hi32, lo32) pairs, exactly representable in float64.
    assert np.all(vals == np.floor(vals))
    assert np.all(vals < 2 ** 32)
    hi, lo = int(vals[0]), int(vals[1])
    assert (hi << 32) | lo == 14695981039346656037  # empty-string digest


def test_every_golden_nonempty_and_finite():
    for name, compute in GOLDENS.items():
        v = np.asarray(compute(), dtype=np.float64)
        assert v.size > 0, name
        assert np.all(np.isfinite(v)), name

import numpy as np
import pytest

from dhe.serialize import (load_checkpoint, read_f64_vector, save_checkpoint,
                           write_f64_vector)


class TestVectorFormat:
    def test_roundtrip(self, tmp_path):
        v = np.random.default_rng(0).normal(0, 1, 257)
        p = tmp_path / "v.bin"
        write_f64_vector(p, v)
        assert np.array_equal(read_f64_vector(p), v)

    def test_empty_vector(self, tmp_path):
        p = tmp_path / "e.bin"
        write_f64_vector(p, np.zeros(0))
        assert read_f64_vector(p).size == 0

    def test_header_is_little_endian_count(self, tmp_path):
        p = tmp_path / "v.bin"
        write_f64_vector(p, np.arange(3.0))
        raw = p.read_bytes()
        assert int.from_bytes(raw[:8], "little") == 3
        assert len(raw) == 8 + 3 * 8

    def test_truncated_file_rejected(self, tmp_path):
        p = tmp_path / "v.bin"
        write_f64_vector(p, np.arange(10.0))
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(ValueError):
            read_f64_vector(p)

    def test_bit_exact(self, tmp_path):
        v = np.array([np.pi, -0.0, 2.0 ** -1074, 1e308])
        p = tmp_path / "v.bin"
        write_f64_vector(p, v)
        out = read_f64_vector(p)
        assert out.tobytes() == v.tobytes()


class TestCheckpointFormat:
    def test_roundtrip_arrays_and_meta(self, tmp_path):
        arrays = {
            "a": np.random.default_rng(0).normal(0, 1, (3, 4)),
            "b": np.arange(5.0),
        }
        meta = {"kind": "demo", "nested": {"x": 1}}
        p = tmp_path / "c.bin"
        save_checkpoint(p, arrays, meta)
        loaded, loaded_meta = load_checkpoint(p)
        assert loaded_meta == meta
        assert set(loaded) == {"a", "b"}
        assert np.array_equal(loaded["a"], arrays["a"])
        assert loaded["a"].shape == (3, 4)

    def test_preserves_order_and_dtype(self, tmp_path):
        arrays = {"w": np.ones((2, 2), dtype=np.float32)}
        p = tmp_path / "c.bin"
        save_checkpoint(p, arrays)
        loaded, _ = load_checkpoint(p)
        assert loaded["w"].dtype == np.float32

    def test_truncated_checkpoint_rejected(self, tmp_path):
        p = tmp_path / "c.bin"
        save_checkpoint(p, {"a": np.arange(100.0)})
        p.write_bytes(p.read_bytes()[:-16])
        with pytest.raises(ValueError):
            load_checkpoint(p)

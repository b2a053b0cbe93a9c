"""Binary file formats shared by goldens and checkpoints.

Vectors: an 8-byte little-endian unsigned length header followed by that
many little-endian IEEE-754 float64 values.

Checkpoints: an 8-byte little-endian unsigned manifest length, a UTF-8
JSON manifest ({"arrays": [{"name", "shape", "dtype"}, ...], "meta": {...}}),
then the concatenated arrays as little-endian float64.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np


def write_f64_vector(path: str | Path, values: np.ndarray) -> None:
    values = np.asarray(values, dtype="<f8").ravel()
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", values.size))
        f.write(values.tobytes())


def read_f64_vector(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        (n,) = struct.unpack("<Q", f.read(8))
        data = np.frombuffer(f.read(8 * n), dtype="<f8")
    if data.size != n:
        raise ValueError(f"{path}: expected {n} values, found {data.size}")
    return data.copy()


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray],
                    meta: dict | None = None) -> None:
    manifest = {
        "arrays": [
            {"name": name, "shape": list(arr.shape), "dtype": str(arr.dtype)}
            for name, arr in arrays.items()
        ],
        "meta": meta or {},
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for arr in arrays.values():
            f.write(np.asarray(arr, dtype="<f8").ravel().tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        (n,) = struct.unpack("<Q", f.read(8))
        manifest = json.loads(f.read(n).decode("utf-8"))
        arrays = {}
        for entry in manifest["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            flat = np.frombuffer(f.read(8 * count), dtype="<f8")
            if flat.size != count:
                raise ValueError(f"{path}: truncated array {entry['name']}")
            arrays[entry["name"]] = flat.reshape(shape).astype(entry["dtype"])
    return arrays, manifest.get("meta", {})

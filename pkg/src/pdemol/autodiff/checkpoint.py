"""Checkpoint format: JSON manifest + raw little-endian arrays.

A checkpoint is a directory with `manifest.json` (format version, parameter
names/shapes/dtype in order, training step, RNG state, config/vocab hashes)
and `arrays.bin` (the parameter values concatenated in manifest order,
little-endian).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tensor import Tensor, parameter

CKPT_VERSION = 1


def save_checkpoint(path: str | Path, params: dict[str, Tensor], *,
                    step: int = 0, rng_state: dict | None = None,
                    meta: dict | None = None) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    names = list(params)
    dtype = str(params[names[0]].data.dtype) if names else "float32"
    manifest = {
        "format_version": CKPT_VERSION,
        "step": step,
        "dtype": dtype,
        "params": [{"name": k, "shape": list(params[k].data.shape)} for k in names],
        "rng_state": rng_state or {},
        "meta": meta or {},
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1))
    le = np.dtype(dtype).newbyteorder("<")
    with open(path / "arrays.bin", "wb") as f:
        for k in names:
            f.write(np.ascontiguousarray(params[k].data, dtype=le).tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict[str, Tensor], dict]:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    if manifest["format_version"] != CKPT_VERSION:
        raise ValueError(f"unsupported checkpoint version {manifest['format_version']}")
    dtype = np.dtype(manifest["dtype"]).newbyteorder("<")
    raw = (path / "arrays.bin").read_bytes()
    params: dict[str, Tensor] = {}
    off = 0
    for rec in manifest["params"]:
        shape = tuple(rec["shape"])
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype=dtype, count=n, offset=off).reshape(shape)
        params[rec["name"]] = parameter(arr.copy())
        off += n * dtype.itemsize
    if off != len(raw):
        raise ValueError(f"checkpoint arrays.bin has {len(raw) - off} trailing bytes")
    return params, manifest

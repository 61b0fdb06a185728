"""Dataset shard container.

A shard is a directory holding:
  manifest.json  format version, vocabulary hash, family registry, config
                 hash, and one record per instance (family, seeds, params,
                 IC spec) sufficient to regenerate the shard bit-exactly
  data.bin       trajectories, little-endian float32, contiguous [N][32][128]
  tokens.bin     target token ids, uint16 little-endian, length-prefixed
"""

from __future__ import annotations

import json
import hashlib
from pathlib import Path

import numpy as np

from ..expr import skeletonize, vocab_hash
from ..pde_zoo import FAMILIES, N_T, N_X, PdeInstance
from ..train_eval.data import Dataset, build_dataset, tokenize_tree

SHARD_VERSION = 1


def family_registry_json() -> dict:
    return {fid: {"qc": fam.qc, "fixed": fam.fixed, "t_final": fam.t_final,
                  "x_final": fam.x_final, "backend": fam.backend}
            for fid, fam in sorted(FAMILIES.items())}


def write_shard(path: str | Path, ds: Dataset, config_hash: str = "") -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    values = np.ascontiguousarray(ds.values, dtype="<f4")
    if values.shape[1:] != (N_T, N_X):
        raise ValueError(f"expected [N][{N_T}][{N_X}] trajectories")
    (path / "data.bin").write_bytes(values.tobytes())
    with open(path / "tokens.bin", "wb") as f:
        for ids in ds.token_ids:
            arr = np.asarray(ids, dtype="<u2")
            f.write(np.asarray([len(arr)], dtype="<u2").tobytes())
            f.write(arr.tobytes())
    manifest = {
        "format_version": SHARD_VERSION,
        "vocab_sha256": vocab_hash(),
        "config_hash": config_hash,
        "n_instances": len(ds),
        "family_registry": family_registry_json(),
        "meta": {k: v for k, v in ds.meta.items()},
        "instances": [inst.to_json() for inst in ds.instances],
        "tgrids": ds.tgrids.tolist(),
    }
    (path / "manifest.json").write_text(json.dumps(manifest))


def read_shard(path: str | Path) -> Dataset:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    if manifest["format_version"] != SHARD_VERSION:
        raise ValueError(f"unsupported shard version {manifest['format_version']}")
    if manifest["vocab_sha256"] != vocab_hash():
        raise ValueError("shard vocabulary hash does not match this build")
    n = manifest["n_instances"]
    raw = (path / "data.bin").read_bytes()
    expect = n * N_T * N_X * 4
    if len(raw) != expect:
        raise ValueError(f"partial shard: data.bin has {len(raw)} bytes, "
                         f"expected {expect} (offset {min(len(raw), expect)})")
    values = np.frombuffer(raw, dtype="<f4").reshape(n, N_T, N_X).copy()

    token_ids = []
    buf = (path / "tokens.bin").read_bytes()
    off = 0
    for i in range(n):
        if off + 2 > len(buf):
            raise ValueError(f"partial shard: tokens.bin truncated at byte {off}")
        ln = int(np.frombuffer(buf, dtype="<u2", count=1, offset=off)[0])
        off += 2
        if off + 2 * ln > len(buf):
            raise ValueError(f"partial shard: tokens.bin truncated at byte {off}")
        token_ids.append(np.frombuffer(buf, dtype="<u2", count=ln, offset=off)
                         .astype(np.int64))
        off += 2 * ln
    if off != len(buf):
        raise ValueError(f"partial shard: {len(buf) - off} trailing token bytes")

    instances = [PdeInstance.from_json(d) for d in manifest["instances"]]
    skeleton_ids = [tokenize_tree(skeletonize(inst.expression()))
                    for inst in instances]
    return Dataset(instances, values, token_ids, skeleton_ids,
                   np.asarray(manifest["tgrids"]), meta=manifest["meta"])


def shard_data_hash(path: str | Path) -> str:
    return hashlib.sha256((Path(path) / "data.bin").read_bytes()).hexdigest()


def generate_shard(path: str | Path, family_counts: dict[str, int], split: str,
                   base_seed: int, config_hash: str = "", **kw) -> Dataset:
    ds = build_dataset(family_counts, split, base_seed, **kw)
    write_shard(path, ds, config_hash=config_hash)
    return ds

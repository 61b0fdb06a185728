"""In-memory dataset: trajectories plus tokenized equations.

Shards store clean trajectories; input noise is drawn at batch-assembly
time (fresh per training batch, fixed seed at eval) so regeneration stays
bit-exact.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..expr import Node, encode_polish, skeletonize, tokens_to_ids
from ..expr.vocab import EOS_ID, PAD_ID
from ..model.network import Batch
from ..pde_zoo import N_IN, PdeInstance, get_family, sample_instance
from ..solvers import SolverFailure, default_config, solve
from .normalize import normalize_batch

MAX_RESAMPLES = 25


@dataclass
class Dataset:
    instances: list[PdeInstance]
    values: np.ndarray                 # (N, nt, nx) float32, clean
    token_ids: list[np.ndarray]        # target equation ids, EOS-terminated
    skeleton_ids: list[np.ndarray]     # same with COEFF placeholders
    tgrids: np.ndarray                 # (N, nt)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def families(self) -> list[str]:
        return [inst.family for inst in self.instances]

    def subset(self, idxs) -> "Dataset":
        idxs = list(idxs)
        return Dataset([self.instances[i] for i in idxs], self.values[idxs],
                       [self.token_ids[i] for i in idxs],
                       [self.skeleton_ids[i] for i in idxs],
                       self.tgrids[idxs], dict(self.meta))


def tokenize_tree(tree: Node) -> np.ndarray:
    ids = tokens_to_ids(encode_polish(tree)) + [EOS_ID]
    return np.asarray(ids, dtype=np.int64)


def _solve_with_resample(inst: PdeInstance, split: str, base_seed: int,
                         index: int = 0, **sample_kw):
    for retry in range(MAX_RESAMPLES):
        try:
            return inst, solve(inst, default_config(inst.fam)), retry
        except SolverFailure:
            # discard and draw a fresh instance from a shifted stream
            inst = sample_instance(inst.family, split,
                                   index + 10_000 * (retry + 1),
                                   base_seed, **sample_kw)
    raise SolverFailure(f"{inst.family}: {MAX_RESAMPLES} consecutive failures")


def _gen_one(args):
    fid, split, index, base_seed, sample_kw = args
    inst = sample_instance(fid, split, index, base_seed, **sample_kw)
    inst, traj, retries = _solve_with_resample(inst, split, base_seed,
                                               index=index, **sample_kw)
    tree = inst.expression()
    return (inst, traj.values.astype(np.float32), tokenize_tree(tree),
            tokenize_tree(skeletonize(tree)), traj.tgrid, retries)


def build_dataset(family_counts: dict[str, int], split: str, base_seed: int = 0,
                  instances: list[PdeInstance] | None = None,
                  **sample_kw) -> Dataset:
    """Generate (or solve pre-built) instances into a Dataset.

    Worker count comes from PDEMOL_WORKERS (default: serial).
    """
    if instances is not None:
        jobs = None
        items = []
        for inst in instances:
            inst2, traj, retries = _solve_with_resample(inst, split, base_seed)
            tree = inst2.expression()
            items.append((inst2, traj.values.astype(np.float32),
                          tokenize_tree(tree), tokenize_tree(skeletonize(tree)),
                          traj.tgrid, retries))
    else:
        jobs = [(fid, split, i, base_seed, sample_kw)
                for fid, n in family_counts.items()
                for i in range(n)]
        workers = int(os.environ.get("PDEMOL_WORKERS", "0"))
        if workers > 1:
            from multiprocessing import Pool
            with Pool(workers) as pool:
                items = pool.map(_gen_one, jobs)
        else:
            items = [_gen_one(j) for j in jobs]

    insts = [it[0] for it in items]
    values = np.stack([it[1] for it in items])
    tgrids = np.stack([it[4] for it in items])
    resamples = int(sum(it[5] for it in items))
    return Dataset(insts, values, [it[2] for it in items], [it[3] for it in items],
                   tgrids, meta={"split": split, "base_seed": base_seed,
                                 "resamples": resamples,
                                 "initial_velocity": "zero"})


def pad_stack(seqs: list[np.ndarray], pad_id: int = PAD_ID) -> np.ndarray:
    L = max(len(s) for s in seqs)
    out = np.full((len(seqs), L), pad_id, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def input_stamp_indices(n_input: int) -> np.ndarray:
    """Uniform subset of the 16 input stamps (n_input in {1,4,8,16})."""
    if n_input == N_IN:
        return np.arange(N_IN)
    if n_input == 1:
        return np.array([0])
    return np.round(np.linspace(0, N_IN - 1, n_input)).astype(int)


def make_batch(ds: Dataset, idxs, sym_mode: str | None = "skeleton",
               noise: float = 0.0, noise_rng: np.random.Generator | None = None,
               n_input: int = N_IN):
    """Assemble a normalized Batch plus its stats.

    sym_mode: 'known' (full equation input), 'skeleton' (COEFF placeholders)
    or None (1-to-1, no symbol modality).
    """
    idxs = np.asarray(idxs)
    sel = input_stamp_indices(n_input)
    vals = ds.values[idxs].astype(np.float64)
    data_in = vals[:, sel]
    if noise > 0.0:
        rng = noise_rng or np.random.default_rng(0)
        sigma = vals.std(axis=(1, 2), keepdims=True)
        data_in = data_in + noise * sigma * rng.standard_normal(data_in.shape)
    data_target = vals[:, N_IN:]
    times_in = ds.tgrids[idxs][:, sel]
    query_times = ds.tgrids[idxs][:, N_IN:]

    norm_in, norm_target, stats = normalize_batch(data_in, data_target)

    sym_in = None
    if sym_mode == "known":
        sym_in = pad_stack([ds.token_ids[i] for i in idxs])
    elif sym_mode == "skeleton":
        sym_in = pad_stack([ds.skeleton_ids[i] for i in idxs])
    elif sym_mode is not None:
        raise ValueError(f"unknown sym_mode {sym_mode!r}")
    sym_target = pad_stack([ds.token_ids[i] for i in idxs])

    batch = Batch(norm_in.astype(np.float32), times_in, query_times, sym_in,
                  norm_target.astype(np.float32), sym_target)
    return batch, stats

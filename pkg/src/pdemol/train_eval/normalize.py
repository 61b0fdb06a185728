"""Per-sample normalization from the input snapshots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA_FLOOR = 1e-12


@dataclass
class NormStats:
    mean: np.ndarray   # (B, 1, 1)
    std: np.ndarray    # (B, 1, 1)


def normalize_batch(data_in: np.ndarray, data_target: np.ndarray | None = None):
    """Shift/scale inputs (and labels) by input-sequence statistics.

    Statistics are computed per sample over all input snapshots; constant
    inputs take the sigma-clamp path (std -> 1).
    """
    mean = data_in.mean(axis=(1, 2), keepdims=True)
    std = data_in.std(axis=(1, 2), keepdims=True)
    std = np.where(std < SIGMA_FLOOR, 1.0, std)
    stats = NormStats(mean, std)
    norm_in = (data_in - mean) / std
    norm_target = None if data_target is None else (data_target - mean) / std
    return norm_in, norm_target, stats


def denormalize(pred: np.ndarray, stats: NormStats) -> np.ndarray:
    return pred * stats.std + stats.mean

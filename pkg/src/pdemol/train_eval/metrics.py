"""Evaluation metrics: relative L2, R^2, valid fraction, symbol error."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..expr import (
    DegenerateMetric,
    EvaluationError,
    ExprError,
    Node,
    PolyTestFn,
    decode_polish,
    eval_operator_on_poly,
    ids_to_tokens,
    symbol_error,
)
from ..expr.vocab import EOS_ID, PAD_ID, SOS_ID

ZERO_NORM = 1e-12


@dataclass
class MetricReport:
    rel_l2_pct: float
    r2: float
    valid_frac_pct: float | None = None
    sym_error_pct: float | None = None
    n_samples: int = 0
    n_excluded_l2: int = 0
    n_excluded_r2: int = 0
    n_degenerate_sym: int = 0
    per_family: dict = field(default_factory=dict)
    header: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "rel_l2_pct": self.rel_l2_pct,
            "r2": self.r2,
            "valid_frac_pct": self.valid_frac_pct,
            "sym_error_pct": self.sym_error_pct,
            "n_samples": self.n_samples,
        }


def relative_l2(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over samples of 100*||pred-target|| / ||target||."""
    val, _, _ = relative_l2_detail(pred, target)
    return val


def relative_l2_detail(pred: np.ndarray, target: np.ndarray):
    if pred.shape != target.shape:
        raise ValueError("shape mismatch")
    p = pred.reshape(pred.shape[0], -1).astype(np.float64)
    t = target.reshape(target.shape[0], -1).astype(np.float64)
    tn = np.linalg.norm(t, axis=1)
    keep = tn > ZERO_NORM
    per = 100.0 * np.linalg.norm(p - t, axis=1)[keep] / tn[keep]
    mean = float(per.mean()) if per.size else float("nan")
    return mean, per, int((~keep).sum())


def r2_score(pred: np.ndarray, target: np.ndarray) -> float:
    val, _ = r2_score_detail(pred, target)
    return val


def r2_score_detail(pred: np.ndarray, target: np.ndarray):
    """R^2 = 1 - sum_i ||v_i-u_i||^2 / sum_i ||v_i - mean(v_i)||^2,
    mean taken per sample over its entries."""
    if pred.shape != target.shape:
        raise ValueError("shape mismatch")
    u = pred.reshape(pred.shape[0], -1).astype(np.float64)
    v = target.reshape(target.shape[0], -1).astype(np.float64)
    dev = v - v.mean(axis=1, keepdims=True)
    den_i = (dev * dev).sum(axis=1)
    keep = den_i > ZERO_NORM
    num = ((v - u)[keep] ** 2).sum()
    den = den_i[keep].sum()
    if den <= 0:
        return float("nan"), int((~keep).sum())
    return float(1.0 - num / den), int((~keep).sum())


def strip_generated(ids: np.ndarray) -> list[str]:
    """Greedy-decoder output ids -> token strings (drop SOS/EOS/PAD tail)."""
    toks = []
    for i in ids:
        i = int(i)
        if i == EOS_ID:
            break
        if i in (PAD_ID, SOS_ID):
            break
        toks.append(i)
    return ids_to_tokens(toks)


def try_decode(ids: np.ndarray) -> Node | None:
    """Tree if the generated sequence is a valid expression, else None."""
    arr = np.asarray(ids)
    if EOS_ID not in arr:
        return None  # hit max length without end-of-sentence
    try:
        return decode_polish(strip_generated(arr))
    except ExprError:
        return None


def symbol_metrics(gen_ids: np.ndarray, target_trees: list[Node],
                   seed: int = 0, n_polys: int = 3):
    """Valid fraction (%) and mean relative symbol error (%) over valid
    decodes; degenerate-denominator cases are counted separately."""
    rng = np.random.default_rng(seed)
    polys = [PolyTestFn.random(rng) for _ in range(n_polys)]
    n = len(target_trees)
    n_valid = 0
    errs = []
    n_degenerate = 0
    for ids, target in zip(gen_ids, target_trees):
        tree = try_decode(ids)
        if tree is None:
            continue
        vals = []
        try:
            for p in polys:
                vals.append(symbol_error(target, tree, p))
        except DegenerateMetric:
            n_degenerate += 1
            n_valid += 1
            continue
        except EvaluationError:
            continue  # not evaluable -> counts invalid
        n_valid += 1
        errs.append(float(np.mean(vals)))
    valid_pct = 100.0 * n_valid / max(1, n)
    err_pct = 100.0 * float(np.mean(errs)) if errs else float("nan")
    return valid_pct, err_pct, n_degenerate

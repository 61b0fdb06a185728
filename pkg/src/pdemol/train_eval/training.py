"""Training loop and model evaluation."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import (
    AdamW,
    Tape,
    add,
    backward,
    clip_grad_norm,
    cross_entropy_loss,
    lr_schedule,
    mse_loss,
    scale,
)
from ..expr import decode_polish
from ..expr.vocab import PAD_ID
from ..model import Batch, ModelConfig, decode_symbols_greedy, encode_and_fuse, \
    forward, init_params, pad_mask
from .data import Dataset, make_batch
from .metrics import MetricReport, r2_score_detail, relative_l2_detail, symbol_metrics
from .normalize import denormalize

log = logging.getLogger(__name__)


@dataclass
class LossWeights:
    alpha: float = 5.0   # data loss weight (Table-6 default)
    beta: float = 1.0    # symbol loss weight

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or (self.alpha == 0 and self.beta == 0):
            raise ValueError("weights must be >= 0 and not both zero")


@dataclass
class TrainResult:
    params: dict
    steps: int
    loss_curve: list = field(default_factory=list)   # (step, loss, lr)
    wall_seconds: float = 0.0


def compute_loss(params, cfg: ModelConfig, batch: Batch, weights: LossWeights):
    """alpha * L_data + beta * L_symbol (normalized space / cross entropy)."""
    data_pred, sym_logits = forward(params, cfg, batch)
    ld = mse_loss(data_pred, batch.data_target)
    parts = {"data": float(ld.data)}
    loss = scale(ld, weights.alpha)
    if sym_logits is not None:
        ls = cross_entropy_loss(sym_logits, batch.sym_target, PAD_ID)
        parts["symbol"] = float(ls.data)
        loss = add(loss, scale(ls, weights.beta))
    return loss, parts


def train(cfg: ModelConfig, train_ds: Dataset, steps: int, *,
          batch_size: int = 16, seed: int = 0, weights: LossWeights | None = None,
          sym_mode: str | None = "skeleton", noise: float = 0.0,
          n_input: int = 16, lr_max: float = 1e-4, params: dict | None = None,
          log_every: int = 500) -> TrainResult:
    weights = weights or LossWeights()
    if params is None:
        params = init_params(cfg, seed=seed)
    opt = AdamW(params, lr=lr_max)
    rng = np.random.default_rng(seed + 1)
    sym_mode = sym_mode if cfg.has_symbols else None

    curve = []
    t0 = time.time()
    for step in range(steps):
        idxs = rng.integers(0, len(train_ds), batch_size)
        batch, _ = make_batch(train_ds, idxs, sym_mode=sym_mode, noise=noise,
                              noise_rng=rng, n_input=n_input)
        with Tape() as tape:
            loss, parts = compute_loss(params, cfg, batch, weights)
        backward(tape, loss)
        clip_grad_norm(params, 1.0)
        lr = lr_schedule(step, steps, lr_max)
        opt.step(lr=lr)
        opt.zero_grad()
        if step % log_every == 0 or step == steps - 1:
            curve.append((step, float(loss.data), lr))
            log.info("step %d loss %.4f (%s) lr %.2e", step, float(loss.data),
                     ", ".join(f"{k}={v:.4f}" for k, v in parts.items()), lr)
    return TrainResult(params, steps, curve, time.time() - t0)


def predict_data(params, cfg: ModelConfig, ds: Dataset, idxs, *,
                 sym_mode: str | None, noise: float = 0.0, noise_seed: int = 0,
                 n_input: int = 16, query_times: np.ndarray | None = None):
    """De-normalized data predictions for a set of samples."""
    batch, stats = make_batch(ds, idxs, sym_mode=sym_mode, noise=noise,
                              noise_rng=np.random.default_rng(noise_seed),
                              n_input=n_input)
    if query_times is not None:
        batch.query_times = np.broadcast_to(query_times, (len(idxs), len(query_times))).copy() \
            if query_times.ndim == 1 else query_times
    pred, _ = forward(params, cfg, batch, teacher_forcing=False)
    return denormalize(pred.data.astype(np.float64), stats), batch


def evaluate(params, cfg: ModelConfig, ds: Dataset, *, sym_mode: str | None = "skeleton",
             noise: float = 0.0, noise_seed: int = 0, n_input: int = 16,
             batch_size: int = 64, sym_metric_seed: int = 0,
             header: dict | None = None) -> MetricReport:
    """All four metrics over a dataset (symbols only in 2-to-2 mode)."""
    sym_mode = sym_mode if cfg.has_symbols else None
    preds = []
    gen_rows = []
    for lo in range(0, len(ds), batch_size):
        idxs = np.arange(lo, min(lo + batch_size, len(ds)))
        pred, batch = predict_data(params, cfg, ds, idxs, sym_mode=sym_mode,
                                   noise=noise, noise_seed=noise_seed + lo,
                                   n_input=n_input)
        preds.append(pred)
        if cfg.has_sym_decoder:
            fused_data, fused_sym = encode_and_fuse(params, cfg, batch)
            gen = decode_symbols_greedy(params, cfg, fused_sym, pad_mask(batch.sym_in))
            gen_rows.append(gen)
    pred = np.concatenate(preds)
    target = ds.values[:, ds.values.shape[1] // 2:].astype(np.float64)

    l2, per, nex = relative_l2_detail(pred, target)
    r2, nex_r2 = r2_score_detail(pred, target)
    report = MetricReport(l2, r2, n_samples=len(ds), n_excluded_l2=nex,
                          n_excluded_r2=nex_r2, header=header or {})

    fams = np.asarray(ds.families)
    tnorm = np.linalg.norm(target.reshape(len(ds), -1), axis=1)
    keep = tnorm > 1e-12
    full_per = np.full(len(ds), np.nan)
    full_per[keep] = per
    for f in sorted(set(ds.families)):
        m = (fams == f) & keep
        if m.any():
            report.per_family[f] = {"rel_l2_pct": float(full_per[m].mean())}

    if cfg.has_sym_decoder and gen_rows:
        L = max(g.shape[1] for g in gen_rows)
        gen = np.full((len(ds), L), PAD_ID, dtype=np.int64)
        lo = 0
        for g in gen_rows:
            gen[lo:lo + len(g), : g.shape[1]] = g
            lo += len(g)
        trees = [decode_polish_ids(ds.token_ids[i]) for i in range(len(ds))]
        valid, serr, ndeg = symbol_metrics(gen, trees, seed=sym_metric_seed)
        report.valid_frac_pct = valid
        report.sym_error_pct = serr
        report.n_degenerate_sym = ndeg
    return report


def decode_polish_ids(ids: np.ndarray):
    from ..expr.vocab import ids_to_tokens
    toks = [int(i) for i in ids if int(i) != PAD_ID]
    if toks and toks[-1] == 2:  # EOS
        toks = toks[:-1]
    return decode_polish(ids_to_tokens(toks))

"""The five-block bi-modal operator network.

Data Encoder, Symbol Encoder, Feature Fusion, Data Decoder, Symbol Decoder,
all pre-norm transformer blocks on a shared parameter dict.  The data
decoder is cross-attention only, so query time points are evaluated
independently of one another; the symbol decoder generates autoregressively
with causal masking (greedy argmax at inference).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import (
    Tensor,
    add,
    concat,
    constant,
    embedding_lookup,
    gelu,
    layer_norm,
    matmul,
    reshape,
    scale,
    slice_axis,
    softmax,
    transpose,
)
from ..expr.vocab import EOS_ID, PAD_ID, SOS_ID
from .config import ModelConfig

NEG_INF = -1e9


@dataclass
class Batch:
    """One training/eval batch (normalized data space)."""

    data_in: np.ndarray            # (B, n_in, nx)
    times_in: np.ndarray           # (B, n_in)
    query_times: np.ndarray        # (B, Q)
    sym_in: np.ndarray | None      # (B, L) token ids, PAD-padded
    data_target: np.ndarray | None = None   # (B, Q, nx)
    sym_target: np.ndarray | None = None    # (B, Lt) ids, EOS-terminated


# -- initialization ---------------------------------------------------------

def _init_linear(params, name, rng, d_in, d_out, dtype):
    params[f"{name}.w"] = _param(rng.normal(0.0, 0.02, (d_in, d_out)), dtype)
    params[f"{name}.b"] = _param(np.zeros(d_out), dtype)


def _param(a, dtype):
    from ..autodiff import parameter
    return parameter(np.asarray(a, dtype=dtype))


def _init_norm(params, name, d, dtype):
    params[f"{name}.g"] = _param(np.ones(d), dtype)
    params[f"{name}.b"] = _param(np.zeros(d), dtype)


def _init_attn(params, name, rng, d, dtype):
    for p in ("wq", "wk", "wv", "wo"):
        _init_linear(params, f"{name}.{p}", rng, d, d, dtype)


def _init_block(params, name, rng, cfg, dtype, cross: bool, self_attn: bool = True):
    d = cfg.d_model
    if self_attn:
        _init_norm(params, f"{name}.ln1", d, dtype)
        _init_attn(params, f"{name}.attn", rng, d, dtype)
    if cross:
        _init_norm(params, f"{name}.lnc", d, dtype)
        _init_attn(params, f"{name}.xattn", rng, d, dtype)
    _init_norm(params, f"{name}.ln2", d, dtype)
    _init_linear(params, f"{name}.ffn1", rng, d, cfg.d_ffn, dtype)
    _init_linear(params, f"{name}.ffn2", rng, cfg.d_ffn, d, dtype)


def init_params(cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> dict[str, Tensor]:
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor] = {}
    d = cfg.d_model

    _init_linear(params, "data_embed", rng, cfg.nx + 1, d, dtype)
    for i in range(cfg.n_data_enc):
        _init_block(params, f"data_enc.{i}", rng, cfg, dtype, cross=False)
    _init_norm(params, "data_enc.lnf", d, dtype)

    if cfg.has_symbols:
        params["sym_embed.table"] = _param(rng.normal(0.0, 0.02, (cfg.vocab_size, d)), dtype)
        for i in range(cfg.n_sym_enc):
            _init_block(params, f"sym_enc.{i}", rng, cfg, dtype, cross=False)
        _init_norm(params, "sym_enc.lnf", d, dtype)
        params["fusion.mod_sym"] = _param(np.zeros(d), dtype)

    params["fusion.mod_data"] = _param(np.zeros(d), dtype)
    for i in range(cfg.n_fusion):
        _init_block(params, f"fusion.{i}", rng, cfg, dtype, cross=False)
    _init_norm(params, "fusion.lnf", d, dtype)

    _init_linear(params, "query_embed", rng, d, d, dtype)
    for i in range(cfg.n_data_dec):
        _init_block(params, f"data_dec.{i}", rng, cfg, dtype, cross=True, self_attn=False)
    _init_norm(params, "data_dec.lnf", d, dtype)
    _init_linear(params, "data_out", rng, d, cfg.nx, dtype)

    if cfg.has_sym_decoder:
        for i in range(cfg.n_sym_dec):
            _init_block(params, f"sym_dec.{i}", rng, cfg, dtype, cross=True)
        _init_norm(params, "sym_dec.lnf", d, dtype)
        _init_linear(params, "sym_out", rng, d, cfg.vocab_size, dtype)

    return params


def param_count(params: dict[str, Tensor]) -> int:
    return sum(p.data.size for p in params.values())


# -- building blocks --------------------------------------------------------

def _linear(params, name, x):
    return add(matmul(x, params[f"{name}.w"]), params[f"{name}.b"])


def _norm(params, name, x):
    return layer_norm(x, params[f"{name}.g"], params[f"{name}.b"])


def _attention(params, name, cfg, q_in, kv_in, mask):
    B, Lq, d = q_in.data.shape
    Lk = kv_in.data.shape[1]
    H = cfg.n_heads
    dh = d // H

    def heads(t, L):
        return transpose(reshape(t, (B, L, H, dh)), (0, 2, 1, 3))

    q = heads(_linear(params, f"{name}.wq", q_in), Lq)
    k = heads(_linear(params, f"{name}.wk", kv_in), Lk)
    v = heads(_linear(params, f"{name}.wv", kv_in), Lk)
    scores = scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dh))
    if mask is not None:
        scores = add(scores, constant(mask.astype(q.data.dtype)))
    att = softmax(scores)
    out = matmul(att, v)
    out = reshape(transpose(out, (0, 2, 1, 3)), (B, Lq, d))
    return _linear(params, f"{name}.wo", out)


def _ffn(params, name, x):
    return _linear(params, f"{name}.ffn2", gelu(_linear(params, f"{name}.ffn1", x)))


def _encoder_block(params, name, cfg, x, mask):
    n = _norm(params, f"{name}.ln1", x)
    h = add(x, _attention(params, f"{name}.attn", cfg, n, n, mask))
    return add(h, _ffn(params, name, _norm(params, f"{name}.ln2", h)))


def _cross_block(params, name, cfg, x, memory, mem_mask):
    h = add(x, _attention(params, f"{name}.xattn", cfg,
                          _norm(params, f"{name}.lnc", x), memory, mem_mask))
    return add(h, _ffn(params, name, _norm(params, f"{name}.ln2", h)))


def _decoder_block(params, name, cfg, x, memory, causal_mask, mem_mask):
    n = _norm(params, f"{name}.ln1", x)
    h = add(x, _attention(params, f"{name}.attn", cfg, n, n, causal_mask))
    h = add(h, _attention(params, f"{name}.xattn", cfg,
                          _norm(params, f"{name}.lnc", h), memory, mem_mask))
    return add(h, _ffn(params, name, _norm(params, f"{name}.ln2", h)))


# -- positional encodings ---------------------------------------------------

def time_encoding(times: np.ndarray, d: int, time_scale: float, dtype) -> np.ndarray:
    """Continuous sinusoidal encoding of (scaled) time values."""
    pos = np.asarray(times, dtype=np.float64) * time_scale
    half = d // 2
    freqs = 1.0 / (10000.0 ** (np.arange(half) / half))
    ang = pos[..., None] * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=-1).astype(dtype)


def index_encoding(L: int, d: int, dtype) -> np.ndarray:
    return time_encoding(np.arange(L), d, 1.0, dtype)


# -- forward pieces ---------------------------------------------------------

def embed_data(params, cfg: ModelConfig, values: np.ndarray, times: np.ndarray) -> Tensor:
    """Affine map of [snapshot; t] plus time-derived positional encoding."""
    dtype = params["data_embed.w"].data.dtype
    x = np.concatenate([values, times[..., None]], axis=-1).astype(dtype)
    h = _linear(params, "data_embed", constant(x))
    pe = time_encoding(times, cfg.d_model, cfg.time_scale, dtype)
    return add(h, constant(pe))


def embed_symbols(params, cfg: ModelConfig, ids: np.ndarray) -> Tensor:
    dtype = params["sym_embed.table"].data.dtype
    h = embedding_lookup(params["sym_embed.table"], ids)
    pe = index_encoding(ids.shape[1], cfg.d_model, dtype)
    return add(h, constant(pe[None]))


def pad_mask(ids: np.ndarray) -> np.ndarray | None:
    """(B,1,1,L) additive mask hiding PAD keys."""
    if ids is None:
        return None
    m = (ids == PAD_ID)
    if not m.any():
        return None
    return np.where(m, NEG_INF, 0.0)[:, None, None, :]


def causal_mask(L: int) -> np.ndarray:
    return np.triu(np.full((1, 1, L, L), NEG_INF), k=1)


def encode_and_fuse(params, cfg: ModelConfig, batch: Batch) -> tuple[Tensor, Tensor | None]:
    """Run both encoders, concatenate, fuse; return per-modality slices."""
    x = embed_data(params, cfg, batch.data_in, batch.times_in)
    for i in range(cfg.n_data_enc):
        x = _encoder_block(params, f"data_enc.{i}", cfg, x, None)
    data_feat = _norm(params, "data_enc.lnf", x)
    n_data = data_feat.data.shape[1]

    if cfg.has_symbols:
        if batch.sym_in is None:
            raise ValueError(f"mode {cfg.mode} requires symbol input")
        smask = pad_mask(batch.sym_in)
        s = embed_symbols(params, cfg, batch.sym_in)
        for i in range(cfg.n_sym_enc):
            s = _encoder_block(params, f"sym_enc.{i}", cfg, s, smask)
        sym_feat = _norm(params, "sym_enc.lnf", s)
        fused_in = concat(
            [add(data_feat, params["fusion.mod_data"]),
             add(sym_feat, params["fusion.mod_sym"])], axis=1)
        if smask is not None:
            B = batch.sym_in.shape[0]
            fmask = np.concatenate(
                [np.zeros((B, 1, 1, n_data)), smask], axis=-1)
        else:
            fmask = None
    else:
        fused_in = add(data_feat, params["fusion.mod_data"])
        fmask = None

    h = fused_in
    for i in range(cfg.n_fusion):
        h = _encoder_block(params, f"fusion.{i}", cfg, h, fmask)
    h = _norm(params, "fusion.lnf", h)

    fused_data = slice_axis(h, 1, 0, n_data)
    fused_sym = slice_axis(h, 1, n_data, h.data.shape[1]) if cfg.has_symbols else None
    return fused_data, fused_sym


def decode_data(params, cfg: ModelConfig, fused_data: Tensor,
                query_times: np.ndarray) -> Tensor:
    """Evaluate the learned operator at arbitrary query times (independent)."""
    dtype = params["query_embed.w"].data.dtype
    pe = time_encoding(query_times, cfg.d_model, cfg.time_scale, dtype)
    q = _linear(params, "query_embed", constant(pe))
    for i in range(cfg.n_data_dec):
        q = _cross_block(params, f"data_dec.{i}", cfg, q, fused_data, None)
    q = _norm(params, "data_dec.lnf", q)
    return _linear(params, "data_out", q)


def decode_symbols_teacher(params, cfg: ModelConfig, fused_sym: Tensor,
                           tgt_ids: np.ndarray, sym_in_mask: np.ndarray | None) -> Tensor:
    """Teacher-forced logits: input is the SOS-shifted target sequence."""
    B, Lt = tgt_ids.shape
    dec_in = np.concatenate([np.full((B, 1), SOS_ID, dtype=tgt_ids.dtype),
                             tgt_ids[:, :-1]], axis=1)
    h = embed_symbols(params, cfg, dec_in)
    cmask = causal_mask(Lt)
    for i in range(cfg.n_sym_dec):
        h = _decoder_block(params, f"sym_dec.{i}", cfg, h, fused_sym, cmask, sym_in_mask)
    h = _norm(params, "sym_dec.lnf", h)
    return _linear(params, "sym_out", h)


def decode_symbols_greedy(params, cfg: ModelConfig, fused_sym: Tensor,
                          sym_in_mask: np.ndarray | None,
                          max_len: int | None = None) -> np.ndarray:
    """Autoregressive argmax generation until EOS or max length.

    Returns (B, L) ids without SOS; rows are PAD-padded after EOS.  Rows
    that never emit EOS fill all max_len positions (flagged invalid by the
    caller via missing EOS).
    """
    max_len = max_len or cfg.max_sym_len
    B = fused_sym.data.shape[0]
    seq = np.full((B, 1), SOS_ID, dtype=np.int64)
    done = np.zeros(B, dtype=bool)
    out = np.full((B, max_len + 1), PAD_ID, dtype=np.int64)
    for step in range(max_len + 1):
        h = embed_symbols(params, cfg, seq)
        cmask = causal_mask(seq.shape[1])
        for i in range(cfg.n_sym_dec):
            h = _decoder_block(params, f"sym_dec.{i}", cfg, h, fused_sym, cmask, sym_in_mask)
        h = _norm(params, "sym_dec.lnf", h)
        logits = _linear(params, "sym_out", slice_axis(h, 1, seq.shape[1] - 1, seq.shape[1]))
        nxt = logits.data[:, 0, :].argmax(axis=-1)
        nxt = np.where(done, PAD_ID, nxt)
        out[:, step] = nxt
        done |= nxt == EOS_ID
        if done.all():
            break
        seq = np.concatenate([seq, nxt[:, None]], axis=1)
    return out


def forward(params, cfg: ModelConfig, batch: Batch,
            teacher_forcing: bool = True) -> tuple[Tensor, Tensor | None]:
    """Full forward pass: (data predictions, symbol logits or None)."""
    fused_data, fused_sym = encode_and_fuse(params, cfg, batch)
    data_pred = decode_data(params, cfg, fused_data, batch.query_times)
    sym_logits = None
    if cfg.has_sym_decoder and teacher_forcing:
        if batch.sym_target is None:
            raise ValueError("2to2 training requires symbol targets")
        sym_logits = decode_symbols_teacher(params, cfg, fused_sym,
                                            batch.sym_target, pad_mask(batch.sym_in))
    return data_pred, sym_logits

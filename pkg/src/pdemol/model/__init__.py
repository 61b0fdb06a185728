from .config import MODES, ModelConfig, PRESETS, desk_config, paper_config
from .network import (
    Batch,
    causal_mask,
    decode_data,
    decode_symbols_greedy,
    decode_symbols_teacher,
    embed_data,
    embed_symbols,
    encode_and_fuse,
    forward,
    init_params,
    pad_mask,
    param_count,
    time_encoding,
)

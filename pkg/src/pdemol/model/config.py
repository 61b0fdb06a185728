"""Model configuration and presets."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..expr.vocab import MAX_SEQ_LEN, VOCAB_SIZE

MODES = ("2to2", "2to1", "1to1")


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 64
    n_heads: int = 4
    n_data_enc: int = 2
    n_sym_enc: int = 2
    n_fusion: int = 2
    n_data_dec: int = 2
    n_sym_dec: int = 2
    d_ffn: int = 256
    vocab_size: int = VOCAB_SIZE
    mode: str = "2to2"
    max_sym_len: int = MAX_SEQ_LEN
    nx: int = 128
    time_scale: float = 100.0   # continuous-time positional encoding scale

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @property
    def has_symbols(self) -> bool:
        return self.mode != "1to1"

    @property
    def has_sym_decoder(self) -> bool:
        return self.mode == "2to2"

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @staticmethod
    def from_json(d: dict) -> "ModelConfig":
        return ModelConfig(**d)


def desk_config(mode: str = "2to2", **overrides) -> ModelConfig:
    """CPU-trainable default preserving the architecture topology."""
    return replace(ModelConfig(mode=mode), **overrides)


def paper_config(mode: str = "2to2") -> ModelConfig:
    """The full-scale hyperparameters (not CPU-trainable here)."""
    return ModelConfig(
        d_model=512, n_heads=8, n_data_enc=2, n_sym_enc=4, n_fusion=8,
        n_data_dec=8, n_sym_dec=8, d_ffn=2048, mode=mode,
    )


PRESETS = {"desk": desk_config, "paper": paper_config}

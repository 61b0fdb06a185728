"""Token vocabulary shared by dataset shards and model checkpoints.

The vocabulary is fixed and versioned: special tokens, operators, symbols,
sign tokens, 1000 three-digit mantissa tokens and integer-exponent tokens.
Numeric constants always occupy exactly three tokens (sign, mantissa,
exponent), e.g. 0.003 -> ``+ 300 E-5`` meaning +300*10^-5.

Serialized as a text file, one token per line, line index = token id; the
sha256 of that text is the compatibility hash carried by shards and
checkpoints.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .tree import BINARY_OPS, FIELD_SYMBOLS, UNARY_OPS, VARIABLES

VOCAB_VERSION = 1

PAD, SOS, EOS, COEFF = "PAD", "SOS", "EOS", "COEFF"
SPECIAL = (PAD, SOS, EOS, COEFF)
SIGNS = ("+", "-")
# Mantissas are rounded to 3 significant digits, so legal magnitudes
# [1e-10, 1e10] need exponents m*10^e with e in [-12, 8]; E9/E10 are kept
# for decode robustness.
EXP_MIN, EXP_MAX = -12, 10
MANTISSAS = tuple(f"{i:03d}" for i in range(1000))
EXPONENTS = tuple(f"E{e}" for e in range(EXP_MIN, EXP_MAX + 1))

TOKENS: tuple[str, ...] = (
    SPECIAL + BINARY_OPS + UNARY_OPS + VARIABLES + FIELD_SYMBOLS + SIGNS
    + MANTISSAS + EXPONENTS
)

TOKEN_TO_ID = {tok: i for i, tok in enumerate(TOKENS)}
PAD_ID, SOS_ID, EOS_ID, COEFF_ID = (TOKEN_TO_ID[t] for t in SPECIAL)
VOCAB_SIZE = len(TOKENS)

#: hard cap on decodable sequence length (excluding SOS/EOS)
MAX_SEQ_LEN = 64


def vocab_text() -> str:
    lines = [f"# pdemol-vocab-v{VOCAB_VERSION}"]
    lines.extend(TOKENS)
    return "\n".join(lines) + "\n"


def vocab_hash() -> str:
    return hashlib.sha256(vocab_text().encode()).hexdigest()


def save_vocab(path: str | Path) -> None:
    Path(path).write_text(vocab_text())


def load_vocab(path: str | Path) -> list[str]:
    """Read a vocabulary file and check it against the built-in one."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# pdemol-vocab-v"):
        raise ValueError(f"{path}: missing vocabulary version header")
    tokens = lines[1:]
    if tuple(tokens) != TOKENS:
        raise ValueError(f"{path}: vocabulary does not match this build")
    return tokens


def ids_to_tokens(ids) -> list[str]:
    return [TOKENS[int(i)] for i in ids]


def tokens_to_ids(tokens) -> list[int]:
    return [TOKEN_TO_ID[t] for t in tokens]

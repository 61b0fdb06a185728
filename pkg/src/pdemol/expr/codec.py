"""Polish-notation codec between expression trees and token sequences.

Encoding is a pre-order traversal; every numeric constant expands to a
(sign, mantissa, exponent) triplet with the mantissa rounded to three
significant digits.  Decoding accepts arbitrary token sequences and raises
``InvalidExpression`` for anything that is not prefix-complete with legal
arities and well-formed number triplets; callers count those toward the
valid-fraction metric.
"""

from __future__ import annotations

import math

from .tree import ARITY, BINARY_OPS, ExprError, LEAF_KINDS, Node, UNARY_OPS
from .vocab import (
    COEFF,
    EXP_MAX,
    EXP_MIN,
    MAX_SEQ_LEN,
    SIGNS,
    TOKEN_TO_ID,
)

CONST_MIN, CONST_MAX = 1e-10, 1e10

_OPERATOR_TOKENS = set(BINARY_OPS) | set(UNARY_OPS)
_LEAF_TOKENS = {k for k in LEAF_KINDS if k not in ("const", "coeff")}


class InvalidExpression(ExprError):
    """Token sequence does not decode to a well-formed expression."""


class ConstantRangeError(ExprError):
    """Constant magnitude outside the encodable range."""


def quantize(v: float) -> tuple[str, str, str]:
    """Round a constant to 3 significant digits and split into tokens."""
    if not math.isfinite(v):
        raise ConstantRangeError(f"non-finite constant {v!r}")
    if v == 0.0:
        return "+", "000", "E0"
    a = abs(v)
    if a < CONST_MIN or a > CONST_MAX:
        raise ConstantRangeError(f"constant magnitude {a:g} outside [1e-10, 1e10]")
    e = math.floor(math.log10(a))
    m = round(a / 10.0 ** (e - 2))
    if m >= 1000:  # e.g. 9.996 -> mantissa 1000, carry into the exponent
        m = 100
        e += 1
    return ("+" if v > 0 else "-"), f"{m:03d}", f"E{e - 2}"


def dequantize(sign: str, mantissa: str, exponent: str) -> float:
    """Inverse of :func:`quantize` for well-formed triplets."""
    m = int(mantissa)
    e = int(exponent[1:])
    v = m * 10.0 ** e
    return -v if sign == "-" else v


def quantized_value(v: float) -> float:
    """The value a constant takes after one encode/decode roundtrip."""
    return dequantize(*quantize(v))


def encode_polish(tree: Node) -> list[str]:
    """Pre-order token stream for a valid tree."""
    out: list[str] = []

    def walk(n: Node) -> None:
        if n.kind == "const":
            out.extend(quantize(n.value))
        elif n.kind == "coeff":
            out.append(COEFF)
        else:
            out.append(n.kind)
            for c in n.children:
                walk(c)

    walk(tree)
    return out


def _parse_number(tokens: list[str], i: int) -> tuple[Node, int]:
    if i + 2 >= len(tokens):
        raise InvalidExpression("truncated number triplet")
    sign, mant, expo = tokens[i], tokens[i + 1], tokens[i + 2]
    if sign not in SIGNS:
        raise InvalidExpression(f"expected sign token, got {sign!r}")
    if not (len(mant) == 3 and mant.isdigit()):
        raise InvalidExpression(f"expected mantissa token, got {mant!r}")
    if not (expo.startswith("E") and _is_int(expo[1:])):
        raise InvalidExpression(f"expected exponent token, got {expo!r}")
    e = int(expo[1:])
    if not (EXP_MIN <= e <= EXP_MAX):
        raise InvalidExpression(f"exponent {e} outside vocabulary range")
    return Node.const(dequantize(sign, mant, expo)), i + 3


def _is_int(s: str) -> bool:
    try:
        int(s)
        return True
    except ValueError:
        return False


def decode_polish(tokens: list[str]) -> Node:
    """Parse a token sequence back into a tree.

    Raises InvalidExpression on truncation, arity mismatch, malformed
    number triplets, unknown tokens, trailing tokens, or over-long input.
    """
    if not tokens:
        raise InvalidExpression("empty sequence")
    if len(tokens) > MAX_SEQ_LEN:
        raise InvalidExpression(f"sequence longer than {MAX_SEQ_LEN} tokens")

    def parse(i: int) -> tuple[Node, int]:
        if i >= len(tokens):
            raise InvalidExpression("truncated sequence")
        tok = tokens[i]
        if tok in _OPERATOR_TOKENS:
            children = []
            j = i + 1
            for _ in range(ARITY[tok]):
                child, j = parse(j)
                children.append(child)
            return Node(tok, tuple(children)), j
        if tok in _LEAF_TOKENS:
            return Node(tok), i + 1
        if tok == COEFF:
            return Node("coeff"), i + 1
        if tok in SIGNS:
            return _parse_number(tokens, i)
        if tok in TOKEN_TO_ID:
            raise InvalidExpression(f"token {tok!r} cannot start an expression")
        raise InvalidExpression(f"unknown token {tok!r}")

    tree, end = parse(0)
    if end != len(tokens):
        raise InvalidExpression(f"{len(tokens) - end} trailing tokens")
    return tree


def is_valid_polish(tokens: list[str]) -> bool:
    try:
        decode_polish(tokens)
        return True
    except ExprError:
        return False

"""Codec tests: Polish-notation roundtrips, quantization, skeletonization."""

import numpy as np
import pytest

from pdemol.expr import (
    ConstantRangeError,
    InvalidExpression,
    MAX_SEQ_LEN,
    Node,
    add,
    cmul,
    decode_polish,
    encode_polish,
    is_valid_polish,
    mul,
    quantize,
    quantized_value,
    skeletonize,
    sub,
    trees_equal,
    unary,
    vocab_hash,
    vocab_text,
)
from pdemol.expr.vocab import TOKENS, load_vocab, save_vocab


def random_tree(rng, depth=0, max_depth=4):
    """Random tree over the full vocabulary, constants in encode range."""
    leaf_p = 0.35 + 0.2 * depth
    if depth >= max_depth or rng.random() < leaf_p:
        r = rng.random()
        if r < 0.35:
            mag = 10.0 ** rng.uniform(-8, 8)
            return Node.const(float(rng.choice([-1, 1]) * mag))
        kinds = ["x", "t", "u", "u_t", "u_tt", "u_x", "u_xx", "u_xxx", "u_xxxx"]
        return Node(str(rng.choice(kinds)))
    r = rng.random()
    if r < 0.55:
        k = str(rng.choice(["add", "sub", "mul", "div"]))
        return Node(k, (random_tree(rng, depth + 1, max_depth),
                        random_tree(rng, depth + 1, max_depth)))
    k = str(rng.choice(["neg", "sin", "cos", "exp", "pow2", "pow3", "pow4"]))
    return Node(k, (random_tree(rng, depth + 1, max_depth),))


def quantize_tree(t: Node) -> Node:
    if t.kind == "const":
        return Node.const(quantized_value(t.value))
    if not t.children:
        return t
    return Node(t.kind, tuple(quantize_tree(c) for c in t.children))


def test_figure_example():
    # cos(1.5 x) + 2 u_x - 2.6
    t = add(unary("cos", cmul(1.5, Node("x"))),
            sub(cmul(2.0, Node("u_x")), Node.const(2.6)))
    toks = encode_polish(t)
    assert toks == ["add", "cos", "mul", "+", "150", "E-2", "x",
                    "sub", "mul", "+", "200", "E-2", "u_x", "+", "260", "E-2"]
    assert trees_equal(decode_polish(toks), t)


def test_single_leaf_identity():
    assert encode_polish(Node("u")) == ["u"]
    assert decode_polish(["u"]).kind == "u"


def test_small_constant_triplet():
    assert encode_polish(Node.const(0.003)) == ["+", "300", "E-5"]


def test_quantize_three_significant_digits():
    assert quantize(1.5) == ("+", "150", "E-2")
    assert quantize(-2.6) == ("-", "260", "E-2")
    assert quantize(9.996) == ("+", "100", "E-1")    # carry into exponent
    assert quantize(0.0) == ("+", "000", "E0")
    assert quantized_value(np.pi) == pytest.approx(3.14)


def test_constant_range_errors():
    for v in (1e-11, 2e10, float("inf")):
        with pytest.raises(ConstantRangeError):
            quantize(v)
    # boundary values are allowed
    assert quantize(1e-10) == ("+", "100", "E-12")
    assert quantize(1e10) == ("+", "100", "E8")


def test_decode_inverse_simple():
    toks = ["add", "u_t", "mul", "+", "100", "E-2", "u_xx"]
    t = decode_polish(toks)
    assert trees_equal(t, add(Node("u_t"), cmul(1.0, Node("u_xx"))))


@pytest.mark.parametrize("bad", [
    ["mul", "u_t"],                      # arity mismatch
    ["add", "u_t"],                      # truncated
    ["u", "u"],                          # trailing tokens
    ["+", "150"],                        # truncated triplet
    ["+", "150", "u_x"],                 # malformed triplet
    ["EOS"],                             # special token
    ["banana"],                          # unknown token
    [],                                  # empty
    ["sin"] * 65,                        # too long
])
def test_decode_invalid(bad):
    with pytest.raises(InvalidExpression):
        decode_polish(bad)
    assert not is_valid_polish(bad)


def test_prefix_completeness_arity_scan():
    """A single scan with an arity counter ends exactly at zero at the end."""
    from pdemol.expr.tree import ARITY
    rng = np.random.default_rng(3)
    for _ in range(300):
        toks = encode_polish(random_tree(rng))
        # scan treating each sign/mantissa/exponent triplet as one leaf
        need = 1
        i = 0
        while i < len(toks):
            tok = toks[i]
            if tok in ("+", "-"):
                need -= 1
                i += 3
                continue
            need += ARITY.get(tok, 0) - 1
            i += 1
            assert need >= 0
        assert need == 0


def test_roundtrip_random_trees():
    rng = np.random.default_rng(7)
    for _ in range(500):
        t = random_tree(rng)
        toks = encode_polish(t)
        if len(toks) > MAX_SEQ_LEN:
            continue
        t2 = decode_polish(toks)
        assert trees_equal(quantize_tree(t), t2)
        # re-encoding a decoded tree is the identity on the token stream
        assert encode_polish(t2) == toks


def test_skeletonize():
    t = sub(Node("u_t"), cmul(0.003, Node("u_xx")))
    s = skeletonize(t)
    assert s == sub(Node("u_t"), mul(Node("coeff"), Node("u_xx")))
    assert skeletonize(Node("u_t")) == Node("u_t")
    assert skeletonize(unary("sin", cmul(2.0, Node("u")))) == \
        unary("sin", mul(Node("coeff"), Node("u")))
    # idempotent
    assert skeletonize(s) == s
    assert "COEFF" in encode_polish(s)


def test_vocab_file_roundtrip(tmp_path):
    p = tmp_path / "vocab.txt"
    save_vocab(p)
    toks = load_vocab(p)
    assert toks == list(TOKENS)
    assert vocab_text().splitlines()[1] == "PAD"
    assert len(vocab_hash()) == 64
    p.write_text(vocab_text().replace("u_xx", "u_yy", 1))
    with pytest.raises(ValueError):
        load_vocab(p)


def test_tree_invariants():
    with pytest.raises(Exception):
        Node("add", (Node("u"),))          # arity
    with pytest.raises(Exception):
        Node.const(float("nan"))           # finite constants
    with pytest.raises(Exception):
        Node("nonsense")

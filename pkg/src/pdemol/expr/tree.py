"""Expression trees for PDE residuals.

A residual like ``u_t - c*u_xx`` is stored as a rooted tree whose internal
nodes are operators and whose leaves are variables, the field symbol ``u``,
partial-derivative symbols (``u_t`` ... ``u_xxxx``), numeric constants, or
the coefficient placeholder used by skeleton mode.  Derivative symbols are
plain leaves; there is no standalone differential-operator node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

BINARY_OPS = ("add", "sub", "mul", "div")
UNARY_OPS = ("neg", "sin", "cos", "exp", "pow2", "pow3", "pow4")
VARIABLES = ("x", "t")
FIELD_SYMBOLS = ("u", "u_t", "u_tt", "u_x", "u_xx", "u_xxx", "u_xxxx")
LEAF_KINDS = VARIABLES + FIELD_SYMBOLS + ("const", "coeff")

ARITY = {k: 2 for k in BINARY_OPS}
ARITY.update({k: 1 for k in UNARY_OPS})
ARITY.update({k: 0 for k in LEAF_KINDS})

#: x-derivative order of each field symbol, (dx, dt)
DERIV_ORDERS = {
    "u": (0, 0),
    "u_t": (0, 1),
    "u_tt": (0, 2),
    "u_x": (1, 0),
    "u_xx": (2, 0),
    "u_xxx": (3, 0),
    "u_xxxx": (4, 0),
}

POW_EXPONENTS = {"pow2": 2, "pow3": 3, "pow4": 4}


class ExprError(ValueError):
    """Malformed expression tree or token stream."""


@dataclass(frozen=True)
class Node:
    """One tree node. Immutable; safe to share between threads."""

    kind: str
    children: tuple["Node", ...] = ()
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ARITY:
            raise ExprError(f"unknown node kind {self.kind!r}")
        if len(self.children) != ARITY[self.kind]:
            raise ExprError(
                f"{self.kind} expects {ARITY[self.kind]} children, got {len(self.children)}"
            )
        if self.kind == "const":
            if self.value is None or not math.isfinite(self.value):
                raise ExprError(f"constant must be finite, got {self.value!r}")
        elif self.value is not None:
            raise ExprError(f"{self.kind} node carries no value")

    # -- convenience constructors -----------------------------------------
    @staticmethod
    def const(v: float) -> "Node":
        return Node("const", (), float(v))

    @staticmethod
    def leaf(kind: str) -> "Node":
        return Node(kind)

    def __str__(self) -> str:
        if self.kind == "const":
            return f"{self.value:g}"
        if self.kind == "coeff":
            return "C"
        if not self.children:
            return self.kind
        if self.kind in ("add", "sub", "mul", "div"):
            sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[self.kind]
            return f"({self.children[0]} {sym} {self.children[1]})"
        return f"{self.kind}({self.children[0]})"

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.depth() for c in self.children)

    def constants(self) -> list[float]:
        out: list[float] = []
        if self.kind == "const":
            out.append(self.value)  # type: ignore[arg-type]
        for c in self.children:
            out.extend(c.constants())
        return out

    def symbols(self) -> set[str]:
        if not self.children:
            return {self.kind}
        s: set[str] = set()
        for c in self.children:
            s |= c.symbols()
        return s

    def max_deriv_orders(self) -> tuple[int, int]:
        """Highest (x-order, t-order) among derivative leaves."""
        dx, dt = 0, 0
        for sym in self.symbols():
            if sym in DERIV_ORDERS:
                ox, ot = DERIV_ORDERS[sym]
                dx, dt = max(dx, ox), max(dt, ot)
        return dx, dt


# small builder helpers used all over pde_zoo -----------------------------

def add(a: Node, b: Node) -> Node:
    return Node("add", (a, b))


def sub(a: Node, b: Node) -> Node:
    return Node("sub", (a, b))


def mul(a: Node, b: Node) -> Node:
    return Node("mul", (a, b))


def div(a: Node, b: Node) -> Node:
    return Node("div", (a, b))


def unary(kind: str, a: Node) -> Node:
    return Node(kind, (a,))


def cmul(c: float, a: Node) -> Node:
    """Coefficient times subtree, constant as the left child."""
    return Node("mul", (Node.const(c), a))


def skeletonize(tree: Node) -> Node:
    """Replace every numeric-constant leaf with the placeholder leaf."""
    if tree.kind == "const":
        return Node("coeff")
    if not tree.children:
        return tree
    return Node(tree.kind, tuple(skeletonize(c) for c in tree.children), None)


def trees_equal(a: Node, b: Node, tol: float = 0.0) -> bool:
    """Structural equality; constants compared to within `tol` (relative)."""
    if a.kind != b.kind or len(a.children) != len(b.children):
        return False
    if a.kind == "const":
        av, bv = a.value, b.value
        if tol == 0.0:
            return av == bv
        return abs(av - bv) <= tol * max(abs(av), abs(bv), 1e-300)
    return all(trees_equal(x, y, tol) for x, y in zip(a.children, b.children))

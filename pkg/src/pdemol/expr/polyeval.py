"""Numeric comparison of decoded differential operators.

Decoded expressions are scored by applying them to tensorized polynomial
test functions P(x,t) = P1(x) P2(t) (deg-4 space, deg-2 time, coefficients
uniform on [-5,5]) on a uniform 128x64 grid over [0,2]^2, where every
derivative symbol is substituted by the exact analytic derivative of P.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import DERIV_ORDERS, ExprError, Node, POW_EXPONENTS

GRID_NX, GRID_NT = 128, 64
GRID_X_MAX, GRID_T_MAX = 2.0, 2.0
DIV_EPS = 1e-12


class EvaluationError(ExprError):
    """Expression cannot be evaluated on the test function."""


class DegenerateMetric(ExprError):
    """Denominator of the relative error is numerically zero."""


@dataclass(frozen=True)
class PolyTestFn:
    """Separable polynomial test function P1(x) * P2(t)."""

    p1: tuple[float, ...]  # degree-4 space polynomial, ascending coefficients
    p2: tuple[float, ...]  # degree-2 time polynomial

    def __post_init__(self):
        if len(self.p1) != 5 or len(self.p2) != 3:
            raise ValueError("P1 must be degree 4 (5 coeffs), P2 degree 2 (3 coeffs)")

    @staticmethod
    def random(rng: np.random.Generator) -> "PolyTestFn":
        return PolyTestFn(
            tuple(rng.uniform(-5.0, 5.0, 5)), tuple(rng.uniform(-5.0, 5.0, 3))
        )


def _polyval(coeffs: tuple[float, ...], z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    for c in reversed(coeffs):
        out = out * z + c
    return out


def _polyder(coeffs: tuple[float, ...], order: int) -> tuple[float, ...]:
    c = list(coeffs)
    for _ in range(order):
        c = [k * ck for k, ck in enumerate(c)][1:]
        if not c:
            c = [0.0]
    return tuple(c)


def eval_grid(nx: int = GRID_NX, nt: int = GRID_NT) -> tuple[np.ndarray, np.ndarray]:
    x = np.linspace(0.0, GRID_X_MAX, nx)
    t = np.linspace(0.0, GRID_T_MAX, nt)
    return x, t


def eval_operator_on_poly(
    tree: Node,
    p: PolyTestFn,
    x: np.ndarray | None = None,
    t: np.ndarray | None = None,
) -> np.ndarray:
    """Evaluate a residual expression with u -> P on the grid.

    Returns an (nx, nt) matrix.  Division by values below 1e-12 in
    magnitude raises EvaluationError and the expression counts as invalid.
    """
    if x is None or t is None:
        x, t = eval_grid()
    dx_max, dt_max = tree.max_deriv_orders()
    if dx_max > 4 or dt_max > 2:
        raise EvaluationError("derivative order beyond x^4 / t^2")

    X = x[:, None]
    T = t[None, :]
    shape = (len(x), len(t))

    # u and its derivatives are separable: d^m P1(x) * d^n P2(t)
    def field(sym: str) -> np.ndarray:
        ox, ot = DERIV_ORDERS[sym]
        return _polyval(_polyder(p.p1, ox), X) * _polyval(_polyder(p.p2, ot), T)

    def ev(n: Node) -> np.ndarray:
        k = n.kind
        if k == "const":
            return np.full(shape, n.value, dtype=float)
        if k == "coeff":
            raise EvaluationError("placeholder leaf is not evaluable")
        if k == "x":
            return np.broadcast_to(X, shape).copy()
        if k == "t":
            return np.broadcast_to(T, shape).copy()
        if k in DERIV_ORDERS:
            return field(k)
        if k == "add":
            return ev(n.children[0]) + ev(n.children[1])
        if k == "sub":
            return ev(n.children[0]) - ev(n.children[1])
        if k == "mul":
            return ev(n.children[0]) * ev(n.children[1])
        if k == "div":
            den = ev(n.children[1])
            if np.abs(den).min() < DIV_EPS:
                raise EvaluationError("division by near-zero value")
            return ev(n.children[0]) / den
        if k == "neg":
            return -ev(n.children[0])
        if k in ("sin", "cos", "exp"):
            a = ev(n.children[0])
            if k == "exp":
                a = np.clip(a, -700.0, 700.0)
            return getattr(np, k)(a)
        if k in POW_EXPONENTS:
            return ev(n.children[0]) ** POW_EXPONENTS[k]
        raise EvaluationError(f"cannot evaluate node kind {k!r}")

    out = ev(tree)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("non-finite values in evaluation")
    return out


def symbol_error(target: Node, predicted: Node, p: PolyTestFn) -> float:
    """Relative L2 distance ||f(P) - fhat(P)|| / ||fhat(P)||.

    The denominator is the generated (predicted) evaluation; degenerate
    denominators raise DegenerateMetric and are reported separately.
    """
    f = eval_operator_on_poly(target, p)
    fhat = eval_operator_on_poly(predicted, p)
    den = np.linalg.norm(fhat)
    if den < DIV_EPS:
        raise DegenerateMetric("predicted evaluation has near-zero norm")
    return float(np.linalg.norm(f - fhat) / den)

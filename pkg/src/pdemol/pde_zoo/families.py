"""The equation zoo: 12 families with flux/reaction variants.

Each concrete family carries its central coefficients, final time, domain
length, solver backend, and a residual builder that emits the expression
tree in the leaf-derivative convention (flux forms are chain-rule expanded,
e.g. (u^2)_xx -> 2 u u_xx + 2 u_x^2).

The Fokker-Planck equation is nondimensionalized (x -> x/L, t -> t/t_f)
before tokenization and solving so its coefficients fit the exponent-token
range; the physical constants live in FP_CONSTANTS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..expr import Node, add, cmul, mul, sub, unary

N_X = 128          # output spatial resolution
N_T = 32           # output time stamps (16 input + 16 target)
N_IN = 16

# Fokker-Planck physical constants (eta is the sampled one)
FP_CONSTANTS = {
    "k_B": 1.380649e-23,
    "T": 300.0,
    "r": 0.1e-6,
    "c": 5e-21,
    "L": 0.1e-6,
}


def fp_coefficients(eta: float) -> tuple[float, float]:
    """Nondimensional diffusion/drift coefficients (a, b) for given eta."""
    kB, T = FP_CONSTANTS["k_B"], FP_CONSTANTS["T"]
    gamma = 6.0 * math.pi * eta * FP_CONSTANTS["r"]
    D = kB * T / gamma
    a = 0.1 * D / FP_CONSTANTS["L"] ** 2          # t_final = 0.1
    b = a * FP_CONSTANTS["c"] / (kB * T)
    return a, b


_u = Node("u")
_ut = Node("u_t")
_utt = Node("u_tt")
_ux = Node("u_x")
_uxx = Node("u_xx")
_uxxx = Node("u_xxx")
_uxxxx = Node("u_xxxx")
_x = Node("x")


def _pow2(n: Node) -> Node:
    return unary("pow2", n)


def _pow3(n: Node) -> Node:
    return unary("pow3", n)


def _one_minus(n: Node) -> Node:
    return sub(Node.const(1.0), n)


@dataclass(frozen=True)
class PdeFamily:
    """One concrete equation (a family id in the dataset manifest)."""

    fid: str
    kind: str                 # solver-dispatch kind
    t_final: float
    x_final: float
    qc: dict                  # coefficients sampled in [l1*qc, l2*qc]
    fixed: dict = field(default_factory=dict)
    backend: str = "method-of-lines"
    flux: str | None = None   # conservation-law variant tag
    reaction: str | None = None

    def residual(self, params: dict) -> Node:
        return _RESIDUALS[self.kind](self, params)

    def central_params(self) -> dict:
        return dict(self.qc)


def _res_heat(fam, p):
    return sub(_ut, cmul(p["c"], _uxx))


def _res_porous(fam, p):
    m = fam.fixed["m"]
    if m == 2:
        a, b = cmul(2.0, mul(_u, _uxx)), cmul(2.0, _pow2(_ux))
    elif m == 3:
        a, b = cmul(3.0, mul(_pow2(_u), _uxx)), cmul(6.0, mul(_u, _pow2(_ux)))
    elif m == 4:
        a, b = cmul(4.0, mul(_pow3(_u), _uxx)), cmul(12.0, mul(_pow2(_u), _pow2(_ux)))
    else:
        raise ValueError(f"unsupported porous-medium exponent {m}")
    return sub(sub(_ut, a), b)


def _res_klein_gordon(fam, p):
    c, m = p["c"], p["m"]
    return add(sub(_utt, cmul(c * c, _uxx)), cmul(m * m * c ** 4, _u))


def _res_sine_gordon(fam, p):
    return add(sub(_utt, _uxx), cmul(p["c"], unary("sin", _u)))


def _res_cahn_hilliard(fam, p):
    eps2 = p["eps"] ** 2
    return add(
        add(add(_ut, cmul(eps2, _uxxxx)), cmul(6.0, _pow2(_ux))),
        cmul(6.0, mul(_u, _uxx)),
    )


def _res_kdv(fam, p):
    return add(add(_ut, cmul(p["delta"] ** 2, _uxxx)), mul(_u, _ux))


def _res_advection(fam, p):
    return add(_ut, cmul(p["beta"], _ux))


def _res_wave(fam, p):
    return sub(_utt, cmul(p["beta"], _uxx))


_REACTIONS = {
    "r1": lambda: mul(_u, _one_minus(_u)),
    "r2": lambda: _u,
    "r3": lambda: mul(_pow2(_u), _one_minus(_u)),
    "r4": lambda: mul(_pow2(_u), _pow2(_one_minus(_u))),
}


def _res_diff_react(fam, p):
    return sub(sub(_ut, cmul(p["nu"], _uxx)), cmul(p["rho"], _REACTIONS[fam.reaction]()))


# d/dx of the flux, chain-rule expanded to leaf derivatives
_FLUX_X = {
    "burgers": lambda: mul(_u, _ux),        # (u^2/2)_x
    "linear": lambda: _ux,                  # (u)_x
    "cubic": lambda: mul(_pow2(_u), _ux),   # (u^3/3)_x
    "cosine": lambda: mul(unary("cos", _u), _ux),  # (sin u)_x
}


def _res_viscous_cons(fam, p):
    adv = add(_ut, cmul(p["k"], _FLUX_X[fam.flux]()))
    return sub(adv, cmul(p["eps"] / math.pi, _uxx))


def _res_inviscid_cons(fam, p):
    return add(_ut, cmul(p["k"], _FLUX_X[fam.flux]()))


def _res_fokker_planck(fam, p):
    a, b = fp_coefficients(p["eta"])
    drift = cmul(b, mul(unary("sin", _x), _ux))
    react = cmul(b, mul(unary("cos", _x), _u))
    return sub(sub(sub(_ut, cmul(a, _uxx)), drift), react)


_RESIDUALS: dict[str, Callable] = {
    "heat": _res_heat,
    "porous": _res_porous,
    "klein_gordon": _res_klein_gordon,
    "sine_gordon": _res_sine_gordon,
    "cahn_hilliard": _res_cahn_hilliard,
    "kdv": _res_kdv,
    "advection": _res_advection,
    "wave": _res_wave,
    "diff_react": _res_diff_react,
    "viscous_cons": _res_viscous_cons,
    "inviscid_cons": _res_inviscid_cons,
    "fokker_planck": _res_fokker_planck,
}


def _build_registry() -> dict[str, PdeFamily]:
    fams = [
        PdeFamily("heat", "heat", 2.0, 2.0, {"c": 3e-3}),
        PdeFamily("porous_medium_m2", "porous", 0.1, 2.0, {}, {"m": 2}),
        PdeFamily("porous_medium_m3", "porous", 0.1, 2.0, {}, {"m": 3}),
        PdeFamily("porous_medium_m4", "porous", 0.1, 2.0, {}, {"m": 4}),
        PdeFamily("klein_gordon", "klein_gordon", 1.0, 2.0, {"c": 1.0, "m": 0.1}),
        PdeFamily("sine_gordon", "sine_gordon", 1.0, 2.0, {"c": 1.0}),
        PdeFamily("cahn_hilliard", "cahn_hilliard", 0.5, 2.0, {"eps": 0.01}),
        PdeFamily("kdv", "kdv", 1.0, 2.0, {"delta": 0.022}, backend="spectral-kdv"),
        PdeFamily("advection", "advection", 2.0, 2.0, {"beta": 0.5},
                  backend="exact-transport"),
        PdeFamily("wave", "wave", 1.0, 2.0, {"beta": 0.5}, backend="exact-transport"),
        PdeFamily("fokker_planck", "fokker_planck", 0.1, 2e-6, {"eta": 1e-3},
                  backend="fp-matrix"),
    ]
    for r in ("r1", "r2", "r3", "r4"):
        rho = 0.1 if r == "r2" else 1.0
        fams.append(PdeFamily(f"diff_react_{r}", "diff_react", 2.0, 2.0,
                              {"nu": 3e-3, "rho": rho}, backend="finite-volume",
                              reaction=r))
    for tag, flux in (("f1", "burgers"), ("f2", "linear"), ("f3", "cubic"),
                      ("f4", "cosine")):
        fams.append(PdeFamily(f"visc_cons_{tag}", "viscous_cons", 2.0, 2.0,
                              {"k": 1.0, "eps": 0.01}, backend="finite-volume",
                              flux=flux))
    for tag, flux in (("f1", "burgers"), ("f2", "cubic"), ("f3", "cosine")):
        fams.append(PdeFamily(f"invisc_cons_{tag}", "inviscid_cons", 2.0, 2.0,
                              {"k": 1.0}, backend="finite-volume", flux=flux))
    return {f.fid: f for f in fams}


FAMILIES: dict[str, PdeFamily] = _build_registry()

# study-friendly aliases
ALIASES = {
    "burgers_viscous": "visc_cons_f1",
    "cubic_viscous": "visc_cons_f3",
    "cosine_viscous": "visc_cons_f4",
    "burgers": "invisc_cons_f1",
    "cubic": "invisc_cons_f2",
    "cosine": "invisc_cons_f3",
}


def get_family(fid: str) -> PdeFamily:
    fid = ALIASES.get(fid, fid)
    try:
        return FAMILIES[fid]
    except KeyError:
        raise KeyError(f"unknown family {fid!r}; known: {sorted(FAMILIES)}") from None


def sample_params(
    family: PdeFamily | str,
    lam: tuple[float, float],
    rng: np.random.Generator | int,
) -> dict:
    """Draw each coefficient-of-interest from Uniform[l1*qc, l2*qc]."""
    if isinstance(family, str):
        family = get_family(family)
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    l1, l2 = lam
    if not l1 < l2 and l1 != l2:
        raise ValueError(f"need l1 <= l2, got {lam}")
    return {name: float(rng.uniform(l1 * qc, l2 * qc)) for name, qc in family.qc.items()}


def sample_params_union(
    family: PdeFamily | str,
    ranges: tuple[tuple[float, float], ...],
    rng: np.random.Generator,
) -> dict:
    """Sample from a union of lambda ranges (used by the OoD split)."""
    if isinstance(family, str):
        family = get_family(family)
    out = {}
    for name, qc in family.qc.items():
        l1, l2 = ranges[rng.integers(len(ranges))]
        out[name] = float(rng.uniform(l1 * qc, l2 * qc))
    return out


def to_expression(family: PdeFamily | str, params: dict) -> Node:
    """Residual tree with numeric coefficients substituted."""
    if isinstance(family, str):
        family = get_family(family)
    return family.residual(params)

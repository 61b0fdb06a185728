"""Finite-volume backend for conservation laws and diffusion-reaction.

Rusanov (local Lax-Friedrichs) interface flux with minmod-limited MUSCL
reconstruction, central differences for the viscous term, pointwise
sources, SSP-RK2 in time.  Periodic or homogeneous-Neumann boundaries
(the latter for the Riemann-problem studies).  Cell-averaged state on
cell centers; downsampling averages fine cells into coarse ones.
"""

from __future__ import annotations

import math

import numpy as np

from ..pde_zoo.families import PdeFamily
from ..pde_zoo.ics import generate_ic
from ..pde_zoo.instances import PdeInstance
from .base import SolveConfig, SolverFailure, downsample_space

# flux and its derivative per conservation-law variant
FLUXES = {
    "burgers": (lambda u: 0.5 * u * u, lambda u: u),
    "linear": (lambda u: u, lambda u: np.ones_like(u)),
    "cubic": (lambda u: u ** 3 / 3.0, lambda u: u * u),
    "cosine": (lambda u: np.sin(u), lambda u: np.cos(u)),
}

#: flux convexity on the Riemann-study state range [0,1]
FLUX_CONVEX = {"burgers": True, "cubic": True, "cosine": False}

REACTIONS = {
    "r1": lambda u: u * (1.0 - u),
    "r2": lambda u: u,
    "r3": lambda u: u * u * (1.0 - u),
    "r4": lambda u: (u * (1.0 - u)) ** 2,
}


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0.0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def _pad(u: np.ndarray, bc: str, n: int = 2) -> np.ndarray:
    if bc == "periodic":
        return np.concatenate([u[-n:], u, u[:n]])
    return np.concatenate([np.full(n, u[0]), u, np.full(n, u[-1])])


def _rhs(u, dx, bc, flux, dflux, k, nu, source):
    up = _pad(u, bc)
    du = np.diff(up)                       # up[i+1]-up[i], len nx+3
    slope = _minmod(du[:-1], du[1:])       # slope at cell i of up[1:-1]
    ctr = up[1:-1]
    # interface i+1/2 between padded cells i and i+1 (i over nx+1 interfaces)
    uL = (ctr + 0.5 * slope)[:-1]
    uR = (ctr - 0.5 * slope)[1:]
    out = np.zeros_like(u)
    if flux is not None:
        a = np.maximum(np.abs(dflux(uL)), np.abs(dflux(uR)))
        F = 0.5 * (flux(uL) + flux(uR)) - 0.5 * a * (uR - uL)
        out -= k * (F[1:] - F[:-1]) / dx
    if nu > 0.0:
        out += nu * (up[3:-1] - 2.0 * u + up[1:-3]) / dx ** 2
    if source is not None:
        out += source(u)
    return out


def solve_fv(instance: PdeInstance, cfg: SolveConfig, t_out: np.ndarray):
    fam = instance.fam
    nx = cfg.nx_int
    L = fam.x_final
    dx = L / nx
    x = (np.arange(nx) + 0.5) * dx
    u = generate_ic(instance.ic, x)
    p = instance.params
    bc = instance.bc

    if fam.kind == "diff_react":
        flux = dflux = None
        k = 0.0
        nu = p["nu"]
        rho = p["rho"]
        R = REACTIONS[fam.reaction]
        source = lambda v: rho * R(v)
        lip = 3.0 * rho  # |R'| bound on the unit range, with margin
    else:
        flux, dflux = FLUXES[fam.flux]
        k = p["k"]
        nu = p.get("eps", 0.0) / math.pi if fam.kind == "viscous_cons" else 0.0
        source = None
        lip = 0.0

    rhs = lambda v: _rhs(v, dx, bc, flux, dflux, k, nu, source)

    out = []
    t = 0.0
    n_steps = 0
    for tk in np.asarray(t_out, dtype=float):
        span = tk - t
        if span > 1e-14:
            while span > 1e-14:
                dt = cfg.cfl * _dt_bound(u, dx, flux, dflux, k, nu, lip)
                dt = min(dt, span)
                u1 = u + dt * rhs(u)
                u = 0.5 * u + 0.5 * (u1 + dt * rhs(u1))
                span -= dt
                n_steps += 1
            if not np.all(np.isfinite(u)):
                raise SolverFailure("finite-volume state non-finite", t_bad=tk)
            t = tk
        out.append(u.copy())
    values = np.stack(out)
    return downsample_space(values, 128, conservative=True), {"steps": n_steps, "nx": nx}


def _dt_bound(u, dx, flux, dflux, k, nu, lip):
    dt = np.inf
    if flux is not None:
        smax = float(np.abs(k * dflux(u)).max())
        if smax > 0:
            dt = min(dt, dx / smax)
    if nu > 0.0:
        dt = min(dt, dx ** 2 / (2.0 * nu))
    if lip > 0.0:
        dt = min(dt, 1.0 / lip)
    if not np.isfinite(dt):
        dt = dx  # no active terms; arbitrary stable step
    return dt


def convex_for(fam: PdeFamily) -> bool:
    if fam.flux not in FLUX_CONVEX:
        raise ValueError(f"{fam.fid} has no Riemann-regime classification")
    return FLUX_CONVEX[fam.flux]

"""Matrix method for the Fokker-Planck equation.

Crank-Nicolson in time on the nondimensionalized drift-diffusion operator
u_t = d/dx [ a u_x + b sin(x) u ]  (x in [0, 20), periodic), with
Chang-Cooper interface weighting.  The discrete generator has zero column
sums (probability mass is conserved to roundoff) and positive off-diagonal
entries; two Rannacher backward-Euler half-steps smooth rough initial data
before CN takes over, keeping the solution nonnegative.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..pde_zoo.families import FP_CONSTANTS, fp_coefficients
from ..pde_zoo.ics import generate_ic
from ..pde_zoo.instances import PdeInstance
from .base import SolveConfig, SolverFailure, downsample_space


def _chang_cooper_delta(p: np.ndarray) -> np.ndarray:
    """Interface weight delta(p) = 1/p - 1/(e^p - 1), delta(0) = 1/2."""
    out = np.empty_like(p)
    small = np.abs(p) < 1e-8
    out[small] = 0.5 - p[small] / 12.0
    ps = p[~small]
    out[~small] = 1.0 / ps - 1.0 / np.expm1(ps)
    return out


def _generator(nx: int, dx: float, a: float, b: float) -> np.ndarray:
    """Dense periodic tridiagonal generator M with zero column sums.

    Cell-centered: cell j spans [j dx, (j+1) dx], so the interface between
    cells j and j+1 sits at (j+1) dx.
    """
    x_iface = (np.arange(nx) + 1.0) * dx
    w = b * np.sin(x_iface)
    p = w * dx / a
    delta = _chang_cooper_delta(p)
    alpha = a / dx + w * (1.0 - delta)   # coefficient of u_{j+1} in J_{j+1/2}
    beta = -a / dx + w * delta           # coefficient of u_j
    M = np.zeros((nx, nx))
    idx = np.arange(nx)
    M[idx, (idx + 1) % nx] += alpha / dx
    M[idx, idx] += beta / dx
    M[idx, idx] -= np.roll(alpha, 1) / dx
    M[idx, (idx - 1) % nx] -= np.roll(beta, 1) / dx
    return M


def solve_fp(instance: PdeInstance, cfg: SolveConfig, t_out: np.ndarray):
    fam = instance.fam
    nx = cfg.nx_int
    L_phys = fam.x_final
    Lc = FP_CONSTANTS["L"]
    x_phys = (np.arange(nx) + 0.5) * (L_phys / nx)
    u = generate_ic(instance.ic, x_phys)

    a, b = fp_coefficients(instance.params["eta"])
    dx = (L_phys / nx) / Lc                      # nondimensional spacing
    M = _generator(nx, dx, a, b)

    # nondimensional time; CN positivity bound dt <= 0.9 dx^2 / a
    t_nd = np.asarray(t_out, dtype=float) / fam.t_final
    dt_max = 0.9 * dx ** 2 / a

    lus: dict[float, tuple] = {}

    def cn_step(u, dt):
        key = round(dt, 15)
        if key not in lus:
            lus[key] = (
                lu_factor(np.eye(nx) - 0.5 * dt * M),
                np.eye(nx) + 0.5 * dt * M,
            )
        lu, B = lus[key]
        return lu_solve(lu, B @ u)

    def be_step(u, dt):
        key = ("be", round(dt, 15))
        if key not in lus:
            lus[key] = lu_factor(np.eye(nx) - dt * M)
        return lu_solve(lus[key], u)

    out = []
    t = 0.0
    n_steps = 0
    first = True
    for tk in t_nd:
        span = tk - t
        if span > 1e-14:
            n_sub = max(1, int(np.ceil(span / dt_max)))
            dt = span / n_sub
            for i in range(n_sub):
                if first:  # Rannacher start-up for rough initial data
                    u = be_step(u, 0.5 * dt)
                    u = be_step(u, 0.5 * dt)
                    first = False
                else:
                    u = cn_step(u, dt)
                n_steps += 1
            if not np.all(np.isfinite(u)):
                raise SolverFailure("Fokker-Planck state non-finite", t_bad=tk)
            t = tk
        out.append(u.copy())
    values = np.stack(out)
    return downsample_space(values, 128, conservative=True), {"steps": n_steps, "nx": nx}

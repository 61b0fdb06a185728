"""Method-of-lines backend: 2nd-order central differences + RK4.

Handles heat, Klein-Gordon, Sine-Gordon and porous-medium with explicit
RK4 (dt from the stiffness bound), and Cahn-Hilliard with CNAB2: the
biharmonic FD term is stepped by Crank-Nicolson (circulant solve via FFT
of the same 5-point stencil), the nonlinear term by 2nd-order
Adams-Bashforth.  Second-order-in-time families start from rest
(u_t(x,0) = 0).
"""

from __future__ import annotations

import numpy as np

from ..pde_zoo.ics import generate_ic
from ..pde_zoo.instances import PdeInstance
from .base import SolveConfig, SolverFailure, downsample_space


def _d2(u: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / dx ** 2


def _rk4(f, u, dt):
    k1 = f(u)
    k2 = f(u + 0.5 * dt * k1)
    k3 = f(u + 0.5 * dt * k2)
    k4 = f(u + dt * k3)
    return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _march(step, u, t_out, dt_max, check=None):
    """Land exactly on each requested stamp with uniform substeps."""
    out = []
    t = 0.0
    n_steps = 0
    for tk in t_out:
        span = tk - t
        if span > 1e-14:
            n_sub = max(1, int(np.ceil(span / dt_max)))
            dt = span / n_sub
            for _ in range(n_sub):
                u = step(u, dt)
                n_steps += 1
            if not np.all(np.isfinite(u if check is None else check(u))):
                raise SolverFailure("non-finite state", t_bad=tk)
            t = tk
        out.append(np.array(u if check is None else check(u)))
    return np.stack(out), n_steps


def solve_mol(instance: PdeInstance, cfg: SolveConfig, t_out: np.ndarray):
    fam = instance.fam
    nx = cfg.nx_int
    L = fam.x_final
    dx = L / nx
    x = np.arange(nx) * dx
    u0 = generate_ic(instance.ic, x)
    p = instance.params
    kind = fam.kind

    if kind == "heat":
        c = p["c"]
        rhs = lambda u: c * _d2(u, dx)
        dt_max = cfg.cfl * dx ** 2 / (2.0 * c)
        step = lambda u, dt: _rk4(rhs, u, dt)
        values, n = _march(step, u0, t_out, dt_max)
    elif kind == "porous":
        m = fam.fixed["m"]
        rhs = lambda u: _d2(np.abs(u) ** (m - 1) * u, dx)  # u^m for u >= 0
        amax = float(np.abs(u0).max()) + 1e-12
        dt_max = cfg.cfl * dx ** 2 / (2.0 * m * amax ** (m - 1))
        step = lambda u, dt: _rk4(rhs, u, dt)
        values, n = _march(step, u0, t_out, dt_max)
    elif kind in ("klein_gordon", "sine_gordon"):
        if kind == "klein_gordon":
            c, m = p["c"], p["m"]
            acc = lambda u: c * c * _d2(u, dx) - (m * m * c ** 4) * u
            speed = abs(c)
        else:
            c = p["c"]
            acc = lambda u: _d2(u, dx) - c * np.sin(u)
            speed = 1.0
        rhs = lambda y: np.stack([y[1], acc(y[0])])
        dt_max = cfg.cfl * dx / speed
        step = lambda y, dt: _rk4(rhs, y, dt)
        y0 = np.stack([u0, np.zeros_like(u0)])
        values, n = _march(step, y0, t_out, dt_max, check=lambda y: y[0])
    elif kind == "cahn_hilliard":
        values, n = _solve_cahn_hilliard(u0, p["eps"], dx, t_out, cfg.cfl)
    else:
        raise ValueError(f"{fam.fid} is not a method-of-lines family")

    return downsample_space(values, 128, conservative=False), {"steps": n, "nx": nx}


def _solve_cahn_hilliard(u0, eps, dx, t_out, cfl):
    """CNAB2 for u_t = -eps^2 u_xxxx - 3 (u^2)_xx (both FD, periodic)."""
    nx = len(u0)
    theta = 2.0 * np.pi * np.fft.rfftfreq(nx)
    # eigenvalues of the 5-point biharmonic stencil [1,-4,6,-4,1]/dx^4
    lam4 = (6.0 - 8.0 * np.cos(theta) + 2.0 * np.cos(2.0 * theta)) / dx ** 4

    def nonlin(u):
        return -3.0 * _d2(u * u, dx)

    amax = float(np.abs(u0).max())
    dt_max = cfl * dx ** 2 / (12.0 * max(amax, 0.5))

    u = np.array(u0)
    n_prev = None
    out = []
    t = 0.0
    n_steps = 0
    dt_last = None
    for tk in t_out:
        span = tk - t
        if span > 1e-14:
            n_sub = max(1, int(np.ceil(span / dt_max)))
            dt = span / n_sub
            if dt_last is None or abs(dt - dt_last) > 1e-15:
                n_prev = None  # AB2 weights assume constant dt; re-bootstrap
            dt_last = dt
            den = 1.0 + 0.5 * dt * eps ** 2 * lam4
            num = 1.0 - 0.5 * dt * eps ** 2 * lam4
            for _ in range(n_sub):
                nl = nonlin(u)
                if n_prev is None:
                    expl = nl                        # IMEX-Euler bootstrap
                else:
                    expl = 1.5 * nl - 0.5 * n_prev
                uh = np.fft.rfft(u)
                uh = (num * uh + dt * np.fft.rfft(expl)) / den
                u = np.fft.irfft(uh, n=nx)
                n_prev = nl
                n_steps += 1
            if not np.all(np.isfinite(u)):
                raise SolverFailure("Cahn-Hilliard state non-finite", t_bad=tk)
            t = tk
        out.append(u.copy())
    return np.stack(out), n_steps

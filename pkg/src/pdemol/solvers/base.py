"""Solver dispatch, trajectory container, noise, and order validation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..pde_zoo.families import N_IN, N_T, N_X, PdeFamily
from ..pde_zoo.instances import PdeInstance, xgrid_for

log = logging.getLogger(__name__)

BACKENDS = ("method-of-lines", "finite-volume", "exact-transport",
            "spectral-kdv", "fp-matrix")


class SolverFailure(RuntimeError):
    """Instability or non-finite state; carries the first bad time."""

    def __init__(self, msg: str, t_bad: float | None = None):
        super().__init__(msg)
        self.t_bad = t_bad


@dataclass(frozen=True)
class SolveConfig:
    backend: str
    nx_int: int = 256
    cfl: float = 0.4

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.nx_int < 256 or self.nx_int % N_X != 0:
            raise ValueError("nx_int must be >= 256 and a multiple of 128")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("CFL safety factor must lie in (0, 1]")


def default_config(family: PdeFamily) -> SolveConfig:
    nx = 512 if family.kind == "kdv" else 256
    return SolveConfig(family.backend, nx_int=nx)


@dataclass
class Trajectory:
    values: np.ndarray           # (nt, 128) float64
    tgrid: np.ndarray
    xgrid: np.ndarray
    instance: PdeInstance
    noise_level: float = 0.0
    diag: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise SolverFailure("trajectory contains non-finite values")
        if self.values.shape != (len(self.tgrid), len(self.xgrid)):
            raise ValueError("trajectory shape does not match grids")

    @property
    def inputs(self) -> np.ndarray:
        return self.values[:N_IN]

    @property
    def targets(self) -> np.ndarray:
        return self.values[N_IN:]


def downsample_space(u: np.ndarray, nx_out: int, conservative: bool) -> np.ndarray:
    """Reduce the space axis (last) from nx_int to nx_out."""
    nx_int = u.shape[-1]
    r = nx_int // nx_out
    if r * nx_out != nx_int:
        raise ValueError("internal grid not a multiple of the output grid")
    if r == 1:
        return u
    if conservative:
        return u.reshape(*u.shape[:-1], nx_out, r).mean(axis=-1)
    return u[..., ::r]


def solve(instance: PdeInstance, cfg: SolveConfig | None = None,
          t_out: np.ndarray | None = None) -> Trajectory:
    """Ground-truth trajectory on the instance grids (or custom stamps)."""
    from . import fokker_planck, fv, mol, spectral, transport

    fam = instance.fam
    if cfg is None:
        cfg = default_config(fam)
    if cfg.backend != fam.backend:
        raise ValueError(f"{fam.fid} expects backend {fam.backend!r}, got {cfg.backend!r}")
    t_out = np.asarray(instance.tgrid if t_out is None else t_out, dtype=float)
    if np.any(np.diff(t_out) <= 0) or t_out[0] < 0:
        raise ValueError("output stamps must be strictly increasing and nonnegative")

    if cfg.backend == "method-of-lines":
        values, diag = mol.solve_mol(instance, cfg, t_out)
    elif cfg.backend == "finite-volume":
        values, diag = fv.solve_fv(instance, cfg, t_out)
    elif cfg.backend == "exact-transport":
        values, diag = transport.solve_exact(instance, cfg, t_out)
    elif cfg.backend == "spectral-kdv":
        values, diag = spectral.solve_kdv(instance, cfg, t_out)
    else:
        values, diag = fokker_planck.solve_fp(instance, cfg, t_out)

    xg = xgrid_for(fam)
    return Trajectory(values, t_out, xg, instance, diag=diag)


def add_noise(traj: Trajectory, level: float, seed: int) -> Trajectory:
    """Additive input noise: values + level * sigma_traj * eps on input stamps."""
    if level < 0:
        raise ValueError("noise level must be >= 0")
    if level == 0.0:
        return traj
    rng = np.random.default_rng(seed)
    values = traj.values.copy()
    sigma = float(values.std())
    values[:N_IN] += level * sigma * rng.standard_normal(values[:N_IN].shape)
    return replace(traj, values=values, noise_level=level)


@dataclass(frozen=True)
class OrderEstimate:
    order: float
    conclusive: bool
    errors: tuple[float, float]


def convergence_order(instance: PdeInstance, nx_base: int = 256) -> OrderEstimate:
    """Observed order from a Richardson triplet at (nx, 2nx, 4nx)."""
    fam = instance.fam
    if fam.backend == "exact-transport":
        raise ValueError("exact backend has no refinement path")
    sols = [solve(instance, SolveConfig(fam.backend, nx_int=n)).values
            for n in (nx_base, 2 * nx_base, 4 * nx_base)]
    e1 = float(np.linalg.norm(sols[0] - sols[1]))
    e2 = float(np.linalg.norm(sols[1] - sols[2]))
    if e2 <= 0 or e1 <= e2:
        return OrderEstimate(float("nan"), False, (e1, e2))
    return OrderEstimate(float(np.log2(e1 / e2)), True, (e1, e2))

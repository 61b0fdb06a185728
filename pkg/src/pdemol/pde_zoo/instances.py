"""PdeInstance: one sampled system, the unit of dataset generation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..expr import Node
from .families import FAMILIES, N_IN, N_T, N_X, PdeFamily, get_family, sample_params, \
    sample_params_union, to_expression
from .ics import IcSpec, sample_ic_spec

TRAIN_RANGE = (0.9, 1.1)
OOD_RANGES = ((0.8, 0.9), (1.1, 1.2))


def xgrid_for(family: PdeFamily, nx: int = N_X) -> np.ndarray:
    """Output spatial grid: conservative backends (finite-volume and the
    flux-form Fokker-Planck scheme) use cell centers, others nodes."""
    L = family.x_final
    if family.backend in ("finite-volume", "fp-matrix"):
        return (np.arange(nx) + 0.5) * (L / nx)
    return np.arange(nx) * (L / nx)


def tgrid_for(family: PdeFamily, nt: int = N_T) -> np.ndarray:
    return np.linspace(0.0, family.t_final, nt)


@dataclass(frozen=True)
class PdeInstance:
    family: str
    params: dict
    ic: IcSpec
    seed: int = 0
    bc: str = "periodic"       # "periodic" or "neumann" (Riemann studies)

    def __post_init__(self):
        fam = get_family(self.family)
        for name, qc in fam.qc.items():
            if name not in self.params:
                raise ValueError(f"{self.family}: missing coefficient {name!r}")

    @property
    def fam(self) -> PdeFamily:
        return get_family(self.family)

    @property
    def xgrid(self) -> np.ndarray:
        return xgrid_for(self.fam)

    @property
    def tgrid(self) -> np.ndarray:
        return tgrid_for(self.fam)

    @property
    def input_times(self) -> np.ndarray:
        return self.tgrid[:N_IN]

    @property
    def target_times(self) -> np.ndarray:
        return self.tgrid[N_IN:]

    def expression(self) -> Node:
        return to_expression(self.fam, self.params)

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "params": dict(self.params),
            "ic": self.ic.to_json(),
            "seed": self.seed,
            "bc": self.bc,
        }

    @staticmethod
    def from_json(d: dict) -> "PdeInstance":
        return PdeInstance(d["family"], d["params"], IcSpec.from_json(d["ic"]),
                           d["seed"], d.get("bc", "periodic"))


def instance_rng(base_seed: int, family: str, split: str, index: int) -> np.random.Generator:
    """Counter-based stream: independent of worker count and order."""
    fam_idx = sorted(FAMILIES).index(get_family(family).fid)
    split_idx = {"train": 0, "test": 1}[split]
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(fam_idx, split_idx, index))
    return np.random.default_rng(ss)


def sample_instance(
    family: str,
    split: str,
    index: int,
    base_seed: int = 0,
    coeff_range: tuple[float, float] = TRAIN_RANGE,
    ood: bool = False,
    ic_class: str | None = None,
) -> PdeInstance:
    fam = get_family(family)
    rng = instance_rng(base_seed, family, split, index)
    if ood:
        params = sample_params_union(fam, OOD_RANGES, rng)
    else:
        params = sample_params(fam, coeff_range, rng)
    ic = sample_ic_spec(fam, split, rng, ic_class=ic_class)
    seed = int(rng.integers(2 ** 31))
    return PdeInstance(fam.fid, params, ic, seed=seed)

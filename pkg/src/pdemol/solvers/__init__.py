from .base import (
    BACKENDS,
    OrderEstimate,
    SolveConfig,
    SolverFailure,
    Trajectory,
    add_noise,
    convergence_order,
    default_config,
    downsample_space,
    solve,
)
from .fv import FLUX_CONVEX, FLUXES, convex_for

from .families import (
    ALIASES,
    FAMILIES,
    FP_CONSTANTS,
    N_IN,
    N_T,
    N_X,
    PdeFamily,
    fp_coefficients,
    get_family,
    sample_params,
    sample_params_union,
    to_expression,
)
from .ics import (
    IcError,
    IcFunction,
    IcSpec,
    generate_ic,
    sample_ic_spec,
    sample_riemann_spec,
)
from .instances import (
    OOD_RANGES,
    TRAIN_RANGE,
    PdeInstance,
    instance_rng,
    sample_instance,
    tgrid_for,
    xgrid_for,
)

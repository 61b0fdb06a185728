"""Multi-operator learning for 1D time-dependent PDEs.

Subpackages:
  expr       expression trees, Polish-notation codec, symbol metrics
  pde_zoo    equation families, coefficient sampling, initial conditions
  solvers    reference numerical solvers producing ground-truth trajectories
  autodiff   reverse-mode autodiff engine and AdamW optimizer
  model      the five-block bi-modal transformer
  train_eval losses, metrics, study runners
  cli_io     dataset shards, run configuration, command-line interface
"""

__version__ = "0.1.0"

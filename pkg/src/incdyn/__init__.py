"""Incremental semiparametric dynamics learning.

A recursive regularized least-squares engine with constant-time Cholesky
factor updates, a random Fourier feature approximation of the Gaussian
kernel, a simulated two-link planar arm with a linear-in-parameters torque
regressor, a prioritized parametric-then-nonparametric cascade estimator,
and a sequential test-then-update experiment harness.
"""

from .harness import (
    ExperimentConfig,
    build_estimator,
    generate_dataset,
    read_dataset,
    run_protocol,
    summarize,
    test_then_update,
    train_stream,
    window_rmse,
)
from .linalg import cholesky_rank1_update, givens_coefficients, solve_two_triangular
from .planar_arm import (
    JointState,
    PlanarArmModel,
    base_params,
    regressor,
    simulate_output,
    trajectory,
)
from .rff import (
    Normalizer,
    RffMap,
    apply_map,
    fit_normalizer,
    gaussian_kernel,
    kernel_ridge_fit,
    kernel_ridge_predict,
    median_heuristic,
    normalize,
    sample_map,
)
from .rrls import RecursiveRidge, batch_ridge
from .semiparametric import SemiparametricModel, load_checkpoint, save_checkpoint

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "JointState",
    "Normalizer",
    "PlanarArmModel",
    "RecursiveRidge",
    "RffMap",
    "SemiparametricModel",
    "apply_map",
    "base_params",
    "batch_ridge",
    "build_estimator",
    "cholesky_rank1_update",
    "fit_normalizer",
    "gaussian_kernel",
    "generate_dataset",
    "givens_coefficients",
    "kernel_ridge_fit",
    "kernel_ridge_predict",
    "load_checkpoint",
    "median_heuristic",
    "normalize",
    "read_dataset",
    "regressor",
    "run_protocol",
    "sample_map",
    "save_checkpoint",
    "simulate_output",
    "solve_two_triangular",
    "summarize",
    "test_then_update",
    "train_stream",
    "trajectory",
    "window_rmse",
]

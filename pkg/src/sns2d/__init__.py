"""Pseudospectral simulation of the 2D Navier-Stokes equations with transport noise."""
from .field import (
    GridSpec,
    ScalarField,
    SpectralVelocity,
    divergence,
    grad_norm_sq,
    inverse_laplacian,
    l2_norm_sq,
    laplacian,
    leray_project,
    nonlinear_term,
    random_divfree_field,
    single_mode,
    sobolev_norm,
    taylor_green,
    transport_apply,
)
from .noise import NoiseModel, WienerPath, coarsen_increments, generate_path, split_seed
from .scheme import (
    NonConvergence,
    SchemeConfig,
    StepLedger,
    Trajectory,
    linear_cayley_solve,
    midpoint_step,
    run_trajectory,
    step_residual,
)
from .pressure import pressure_bound_stats, pressure_cor, pressure_det, pressure_ito
from .analysis import ErrorReport, ErrorSample, error_functional, fit_order, holder_quotient, single_mode_exact
from .harness import StudyConfig, ValidateConfig, convergence_study, validate_suite

__version__ = "0.1.0"

"""Gaussian simulator for two fiber-coupled optomechanical cavities."""

__version__ = "0.1.0"

from .analysis import (
    SweepResult,
    figure_dataset,
    find_threshold,
    plus_minus_decomposition,
    steady_state,
    sweep,
    transient,
)
from .dynamics import Trajectory, evolve_covariance, evolve_mean, solve_steady
from .errors import (
    BracketError,
    ConvergenceError,
    CVGNError,
    DomainError,
    IntegrationBlowupError,
    NumericalError,
    UnphysicalStateError,
    UnstableSystemError,
    ValidationError,
)
from .gaussian import (
    BipartitionSpec,
    gaussian_discord,
    is_physical,
    log_negativity_bipartition,
    log_negativity_two_mode,
    symplectic_eigenvalues,
    two_mode_invariants,
)
from .network import (
    DriftDiffusion,
    FullParams,
    MeanFieldState,
    SimplifiedParams,
    build_full_linearized,
    build_simplified,
    mean_field,
)

__all__ = [
    "BipartitionSpec", "BracketError", "CVGNError", "ConvergenceError", "DomainError", "DriftDiffusion",
    "FullParams", "IntegrationBlowupError", "MeanFieldState", "NumericalError", "SimplifiedParams",
    "SweepResult", "Trajectory", "UnphysicalStateError", "UnstableSystemError", "ValidationError",
    "build_full_linearized", "build_simplified", "evolve_covariance", "evolve_mean", "figure_dataset",
    "find_threshold", "gaussian_discord", "is_physical", "log_negativity_bipartition",
    "log_negativity_two_mode", "mean_field", "plus_minus_decomposition", "solve_steady", "steady_state",
    "sweep", "symplectic_eigenvalues", "transient", "two_mode_invariants",
]

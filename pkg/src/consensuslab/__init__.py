"""Consensus analysis for linear random networks driven by i.i.d. stochastic matrices."""

__version__ = "0.1.0"

from .core import (
    ConfigError,
    MatrixDistribution,
    RngPolicy,
    StochasticMatrix,
    load_config,
    sample,
    validate_matrix,
)
from .projection import ProjectionPair, diameter, disagreement, make_projections
from .spectral import (
    NumericalError,
    Spectrum,
    deterministic_verdict,
    eigen_spectrum,
    second_eigenvalue_modulus,
    spectral_radius,
)
from .dynamics import (
    ModeReport,
    TrajectoryRecord,
    estimate_modes,
    run_paths,
    shift_invariance_check,
    simulate_path,
    zero_one_probe,
)
from .analysis import (
    ConsensusVerdict,
    ExpectedMatrix,
    cross_validate,
    expected_matrix,
    lift_second_order,
    random_verdict,
)

__all__ = [
    "ConfigError",
    "ConsensusVerdict",
    "ExpectedMatrix",
    "MatrixDistribution",
    "ModeReport",
    "NumericalError",
    "ProjectionPair",
    "RngPolicy",
    "Spectrum",
    "StochasticMatrix",
    "TrajectoryRecord",
    "cross_validate",
    "deterministic_verdict",
    "diameter",
    "disagreement",
    "eigen_spectrum",
    "estimate_modes",
    "expected_matrix",
    "lift_second_order",
    "load_config",
    "make_projections",
    "random_verdict",
    "run_paths",
    "sample",
    "second_eigenvalue_modulus",
    "shift_invariance_check",
    "simulate_path",
    "spectral_radius",
    "validate_matrix",
    "zero_one_probe",
]

"""Direct fidelity estimation designs for local Pauli measurements.

Two offline designers share one unbiased one-shot estimator class: the
OASIS linear-program surrogate and the exact spectral minimax SDP. The
online estimator samples a setting from ``q``, measures, and outputs
``alpha[u, b] / q[u]``.
"""

__version__ = "0.1.0"

from .core import (
    second_moment_operator,
    statewise_optimal_law,
    surrogate_value,
    unbiasedness_residual,
    variance_at_state,
    worst_case_variance,
)
from .design import DesignCertificate, EstimatorDesign
from .oasis import OASISDesigner, solve_oasis
from .povm import MeasurementFamily
from .simulate import ExperimentConfig, chebyshev_budget, depolarized_state, haar_random_target, run_experiment, run_shots
from .spectral import SpectralDesigner, solve_spectral, validate_certificate

__all__ = [
    "DesignCertificate",
    "EstimatorDesign",
    "ExperimentConfig",
    "MeasurementFamily",
    "OASISDesigner",
    "SpectralDesigner",
    "chebyshev_budget",
    "depolarized_state",
    "haar_random_target",
    "run_experiment",
    "run_shots",
    "second_moment_operator",
    "solve_oasis",
    "solve_spectral",
    "statewise_optimal_law",
    "surrogate_value",
    "unbiasedness_residual",
    "validate_certificate",
    "variance_at_state",
    "worst_case_variance",
]

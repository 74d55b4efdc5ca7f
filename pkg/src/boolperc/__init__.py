"""Monte Carlo and quadrature toolkit for Poisson-Boolean continuum percolation."""
from .analytic import coverage_prob, n_max, phi, pi_delta, truncation_intensity
from .estimators import (Estimate, ThetaCurve, estimate_crossing, estimate_theta_alpha, estimate_theta_curve,
                         find_lambda_c, find_lambda_tilde)
from .radius_laws import Dirac, ExpTail, PowerLawC1, StretchedExpC2, TruncatedAt, law_from_dict
from .sampler import BallConfig, ModelSpec, resample_cell, sample_cells, sample_config

__version__ = "0.1.0"

__all__ = [
    "BallConfig", "Dirac", "Estimate", "ExpTail", "ModelSpec", "PowerLawC1", "StretchedExpC2", "ThetaCurve",
    "TruncatedAt", "coverage_prob", "estimate_crossing", "estimate_theta_alpha", "estimate_theta_curve",
    "find_lambda_c", "find_lambda_tilde", "law_from_dict", "n_max", "phi", "pi_delta", "resample_cell",
    "sample_cells", "sample_config", "truncation_intensity",
]

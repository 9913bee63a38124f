"""Lee-Yang zeros of nonlinear collective-spin models and their detection by a probe qubit."""

__version__ = "0.1.0"

from .errors import (AtZero, BracketInvalid, DegenerateZero, EmptyScan, LeeYangError,
                     NonConvergence, SizeExceeded, StencilFailure)
from .model import (ModelSpec, ScaledPolynomial, SpectrumLevel, build_polynomial, build_spectrum,
                    partition_value, thermo_energy_beta)
from .probe import (DetectionHit, JointScan, QubitSpec, QubitState, amplitude_ratio,
                    amplitude_ratio_factorized, evolved_state, scan_joint, scan_time,
                    tilde_partition)
from .qfim import (EnergyDeviations, QfimMatrix, energy_deviations, qfim_at_zero, qfim_exact,
                   qfim_small_beta_gamma)
from .rootfinder import (CriticalSearchResult, ZeroSet, find_critical_beta_gamma, solve_roots,
                         unit_circle_deviation, verify_theorem1, vieta_norm_product, zeros_of)

__all__ = [
    "AtZero", "BracketInvalid", "CriticalSearchResult", "DegenerateZero", "DetectionHit",
    "EmptyScan", "EnergyDeviations", "JointScan", "LeeYangError", "ModelSpec", "NonConvergence",
    "QfimMatrix", "QubitSpec", "QubitState", "ScaledPolynomial", "SizeExceeded", "SpectrumLevel",
    "StencilFailure", "ZeroSet", "amplitude_ratio", "amplitude_ratio_factorized", "build_polynomial",
    "build_spectrum", "energy_deviations", "evolved_state", "find_critical_beta_gamma",
    "partition_value", "qfim_at_zero", "qfim_exact", "qfim_small_beta_gamma", "scan_joint",
    "scan_time", "solve_roots", "thermo_energy_beta", "tilde_partition", "unit_circle_deviation",
    "verify_theorem1", "vieta_norm_product", "zeros_of",
]

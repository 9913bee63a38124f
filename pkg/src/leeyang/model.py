"""Nonlinear collective-spin model H = gamma*Jz**k + h*Jz in dimensionless form.

Everything here is parameterized by the products beta*gamma and beta*h.
Coefficients of the partition polynomial are kept as logarithms because
exp(-beta*gamma*(n - N/2)**k) overflows double precision already at
modest N and k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp


@dataclass(frozen=True)
class ModelSpec:
    """Parameters (N, k, beta*gamma, beta*h) of the spin system."""

    spins: int
    nonlinearity: int
    beta_gamma: float
    beta_h: float = 0.0

    def __post_init__(self):
        if int(self.spins) != self.spins or self.spins < 1:
            raise ValueError(f"spins must be a positive integer, got {self.spins!r}")
        if int(self.nonlinearity) != self.nonlinearity or self.nonlinearity < 1:
            raise ValueError(f"nonlinearity must be an integer >= 1, got {self.nonlinearity!r}")
        if not (math.isfinite(self.beta_gamma) and math.isfinite(self.beta_h)):
            raise ValueError("beta_gamma and beta_h must be finite")
        object.__setattr__(self, "spins", int(self.spins))
        object.__setattr__(self, "nonlinearity", int(self.nonlinearity))
        object.__setattr__(self, "beta_gamma", float(self.beta_gamma))
        object.__setattr__(self, "beta_h", float(self.beta_h))

    @property
    def fugacity(self) -> float:
        return math.exp(-self.beta_h)

    def with_beta_h(self, beta_h: float) -> "ModelSpec":
        return ModelSpec(self.spins, self.nonlinearity, self.beta_gamma, beta_h)

    def rescaled(self, factor: float) -> "ModelSpec":
        """Spec at inverse temperature factor*beta with gamma and h unchanged."""
        return ModelSpec(self.spins, self.nonlinearity,
                         self.beta_gamma * factor, self.beta_h * factor)


@dataclass(frozen=True)
class SpectrumLevel:
    index: int
    magnetization: float
    degeneracy: int
    energy_beta: float


@dataclass(frozen=True, eq=False)
class ScaledPolynomial:
    """Partition polynomial sum_n p_n z**n stored as log p_n.

    ``scale`` is max_n log p_n, so ``normalized`` has largest entry 1.
    """

    degree: int
    log_coeff: np.ndarray
    scale: float

    @property
    def log_normalized(self) -> np.ndarray:
        return self.log_coeff - self.scale

    @property
    def normalized(self) -> np.ndarray:
        return np.exp(self.log_normalized)

    def is_palindromic(self) -> bool:
        return bool(np.array_equal(self.log_coeff, self.log_coeff[::-1]))


def magnetizations(spins: int) -> np.ndarray:
    return np.arange(spins + 1) - spins / 2


def magnetization_powers(spins: int, k: int) -> np.ndarray:
    """(n - N/2)**k for n = 0..N.

    Evaluated as the integer (2n - N)**k divided by 2**k so that the even-k
    case is exactly symmetric under n -> N - n.
    """
    two_k = float(2 ** k)
    return np.array([float((2 * n - spins) ** k) / two_k for n in range(spins + 1)])


def log_binomials(spins: int) -> np.ndarray:
    n = np.arange(spins + 1)
    return gammaln(spins + 1) - (gammaln(n + 1) + gammaln(spins - n + 1))


def build_spectrum(spec: ModelSpec) -> list[SpectrumLevel]:
    N = spec.spins
    mk = magnetization_powers(N, spec.nonlinearity)
    m = magnetizations(N)
    return [
        SpectrumLevel(
            index=n,
            magnetization=float(m[n]),
            degeneracy=math.comb(N, n),
            energy_beta=float(spec.beta_gamma * mk[n] + spec.beta_h * m[n]),
        )
        for n in range(N + 1)
    ]


def build_polynomial(spec: ModelSpec) -> ScaledPolynomial:
    """Coefficients of Z as a polynomial in z = exp(-beta*h).

    The overall factor exp(beta*h*N/2) is dropped, so beta_h is never read.
    """
    N = spec.spins
    log_coeff = log_binomials(N) - spec.beta_gamma * magnetization_powers(N, spec.nonlinearity)
    log_coeff.setflags(write=False)
    return ScaledPolynomial(degree=N, log_coeff=log_coeff, scale=float(log_coeff.max()))


def level_log_weights(spec: ModelSpec) -> np.ndarray:
    """log(d_n * exp(-beta*E_n)) for every Dicke level."""
    N = spec.spins
    return (log_binomials(N)
            - spec.beta_gamma * magnetization_powers(N, spec.nonlinearity)
            - spec.beta_h * magnetizations(N))


def partition_value(spec: ModelSpec) -> float:
    """log Z, including the exp(beta*h*N/2) prefactor."""
    poly = build_polynomial(spec)
    n = np.arange(spec.spins + 1)
    return float(spec.beta_h * spec.spins / 2 + poly.scale
                 + logsumexp(poly.log_normalized - spec.beta_h * n))


def thermal_probabilities(spec: ModelSpec) -> np.ndarray:
    lw = level_log_weights(spec)
    return np.exp(lw - logsumexp(lw))


def thermo_energy_beta(spec: ModelSpec, beta: float) -> float:
    """Thermal mean of gamma*m**k + h*m, i.e. -d(ln Z)/d(beta) at fixed gamma, h."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    energies = np.array([lvl.energy_beta for lvl in build_spectrum(spec)]) / beta
    return float(np.dot(thermal_probabilities(spec), energies))

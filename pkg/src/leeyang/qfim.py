"""Quantum Fisher information of the probe qubit for (lambda, beta).

The reduced state only has its coherence c = g * rho0_01 * e^{-i w0 t} depending
on the parameters, with d_a g = g * dE_a.  For such a qubit the QFIM reduces to

    pure:   F_ab = 4|c|^2 Re(dE_a conj(dE_b))
    mixed:  F_ab = 4|c|^2 [Re(dE_a conj(dE_b)) + |c|^2 Re(dE_a) Re(dE_b) / det(rho_t)]

Derivatives in beta are taken at fixed gamma and h.  ``freeze_zeros=True``
instead keeps beta*gamma fixed, so only the fugacity moves and the zeros stay
put; this is the convention behind the closed forms at a zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _logpoly as lp
from .errors import AtZero, DegenerateZero
from .model import (ModelSpec, build_polynomial, level_log_weights, magnetization_powers,
                    magnetizations, thermal_probabilities)
from .probe import QubitSpec, evolved_state
from .rootfinder import ZeroSet, zeros_of

PURE_DET = 1e-12
AT_ZERO_TOL = 1e-10
ON_CIRCLE = 1e-10


@dataclass(frozen=True)
class QfimMatrix:
    f_ll: float
    f_bb: float
    f_lb: float
    regime: str  # pure | mixed | at-zero | approx-pure | approx-mixed
    valid: bool = True

    def as_array(self) -> np.ndarray:
        return np.array([[self.f_ll, self.f_lb], [self.f_lb, self.f_bb]])

    @property
    def det(self) -> float:
        return self.f_ll * self.f_bb - self.f_lb ** 2

    def is_psd(self, tol: float = 1e-10) -> bool:
        scale = max(1.0, self.f_ll * self.f_bb)
        return self.f_ll >= -tol and self.f_bb >= -tol and self.det >= -tol * scale


@dataclass(frozen=True)
class EnergyDeviations:
    """dE_x = E_x - E~_x with E_x = -d_x ln Z and E~_x = -d_x ln Z~."""

    dE_lambda: complex
    dE_beta: complex
    E_lambda: float
    E_beta: float
    tildeE_lambda: complex
    tildeE_beta: complex
    frozen_zeros: bool = False


@dataclass(frozen=True)
class AtZeroForm:
    """Closed-form QFIM at a tuned zero plus the pieces it is built from."""

    qfim: QfimMatrix
    zero_index: int
    log_ratio: float  # ln of prod_{i!=m}|z_m - z_i|^2 / |prod_i (|z_m| - z_i)|^2
    denominator_phase: float  # arg of prod_i (|z_m| - z_i), wrapped
    beta_h: float
    lambda_t: float
    drift: complex  # R = sum m^k q_n z^n / (z P'(z)) at z_m


def _beta_energies(spec: ModelSpec, beta: float, freeze_zeros: bool) -> np.ndarray:
    """Per-level energy gamma*m^k + h*m in units where beta multiplies it."""
    m = magnetizations(spec.spins)
    out = (spec.beta_h / beta) * m
    if not freeze_zeros:
        out = out + (spec.beta_gamma / beta) * magnetization_powers(spec.spins, spec.nonlinearity)
    return out


def energy_deviations(spec: ModelSpec, lambda_t: float, t: float, beta: float,
                      freeze_zeros: bool = False) -> EnergyDeviations:
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t!r}")
    m = magnetizations(spec.spins)
    a = level_log_weights(spec) - 2j * lambda_t * m
    terms = np.exp(a - a.real.max())
    s = terms.sum()
    g_abs = abs(s) / np.abs(terms).sum()
    if g_abs < AT_ZERO_TOL:
        raise AtZero(f"|Z~/Z| = {g_abs:.3g} at lambda_t={lambda_t!r}; use the at-zero closed form")
    energies = _beta_energies(spec, beta, freeze_zeros)
    tilde_l = 2j * t * complex((m * terms).sum() / s)
    tilde_b = complex((energies * terms).sum() / s)
    e_beta = float(np.dot(thermal_probabilities(spec), energies))
    return EnergyDeviations(dE_lambda=-tilde_l, dE_beta=e_beta - tilde_b, E_lambda=0.0,
                            E_beta=e_beta, tildeE_lambda=tilde_l, tildeE_beta=tilde_b,
                            frozen_zeros=freeze_zeros)


def qfim_from_coherence(coherence: complex, p_up: float, dE_l: complex, dE_b: complex,
                        pure_det: float = PURE_DET) -> QfimMatrix:
    """Two-level QFIM when only the coherence depends on the parameters."""
    c2 = abs(coherence) ** 2
    det = p_up * (1 - p_up) - c2
    d = (dE_l, dE_b)
    base = [[4 * c2 * (d[i] * np.conj(d[j])).real for j in range(2)] for i in range(2)]
    if det < pure_det:
        return QfimMatrix(float(base[0][0]), float(base[1][1]), float(base[0][1]), "pure")
    extra = [[4 * c2 * c2 * d[i].real * d[j].real / det for j in range(2)] for i in range(2)]
    f = [[base[i][j] + extra[i][j] for j in range(2)] for i in range(2)]
    return QfimMatrix(float(f[0][0]), float(f[1][1]), float(f[0][1]), "mixed")


def qfim_exact(spec: ModelSpec, qubit: QubitSpec, t: float, lam: float, beta: float,
               freeze_zeros: bool = False) -> QfimMatrix:
    """QFIM of the evolved probe state; falls back to the closed form at a zero."""
    rho0 = qubit.initial_state
    rho_t = evolved_state(spec, qubit, t, lam, beta)
    if rho0.coherence == 0:
        regime = "pure" if rho_t.det < PURE_DET else "mixed"
        return QfimMatrix(0.0, 0.0, 0.0, regime)
    try:
        dev = energy_deviations(spec, lam * t, t, beta, freeze_zeros=freeze_zeros)
    except AtZero:
        zs = zeros_of(spec)
        w = complex(-spec.beta_h - 2j * lam * t)
        m = int(np.argmin(lp.log_distance(zs.log_zeros, w)))
        form = at_zero_form(spec, m, t, beta, zero_drift=not freeze_zeros, zeros=zs)
        scale = 4 * abs(rho0.coherence) ** 2  # closed form assumes |rho0_01| = 1/2
        q = form.qfim
        return QfimMatrix(scale * q.f_ll, scale * q.f_bb, scale * q.f_lb, "at-zero")
    return qfim_from_coherence(rho_t.coherence, rho_t.p_up, dev.dE_lambda, dev.dE_beta)


def at_zero_form(spec: ModelSpec, zero_index: int, t: float, beta: float,
                 zero_drift: bool = False, zeros: ZeroSet | None = None) -> AtZeroForm:
    """QFIM for the |+> probe with (beta*h, lambda*t) tuned onto zero m.

    With the default ``zero_drift=False`` the zeros are held fixed under d_beta:
    F_ll = 4 t^2 |z_m|^2 rho, F_bb = h_m^2 |z_m|^2 rho, F_lb = 0, where rho is
    prod_{i!=m}|z_m - z_i|^2 / prod_i(|z_m| - z_i)^2 and h_m = -ln|z_m|/beta.
    ``zero_drift=True`` keeps gamma fixed instead, so z_m moves with beta and
    F_bb = |z_m|^2 |h_m + gamma R|^2 rho, F_lb = 2 t gamma Im(R) |z_m|^2 rho.
    """
    if not t > 0 or not beta > 0:
        raise ValueError("t and beta must be positive")
    if zeros is None:
        zeros = zeros_of(spec)
    N = len(zeros)
    if not 0 <= zero_index < N:
        raise IndexError(f"zero index {zero_index} out of range for {N} zeros")
    if zeros.multiplicity(zero_index) > 1:
        raise DegenerateZero(
            f"zero {zero_index} belongs to a cluster of size {zeros.multiplicity(zero_index)}; "
            "prod_{i!=m}|z_m - z_i| vanishes and the closed form is identically 0"
        )
    w = zeros.log_zeros
    wm = w[zero_index]
    others = np.delete(w, zero_index)
    log_num = 2 * float(lp.log_abs_sub(wm, others).sum())
    # prod_i(|z_m| - z_i) equals P(|z_m|)/p_N and is real positive; keep the
    # literal complex product to expose its phase
    log_den_c = lp.log_sub(complex(wm.real), w).sum()
    log_ratio = log_num - 2 * float(log_den_c.real)
    phase = float(lp.wrap_angle(log_den_c.imag))

    beta_h = -float(wm.real)
    if abs(math.expm1(wm.real)) < ON_CIRCLE:
        beta_h = 0.0
    h = beta_h / beta
    log_core = 2 * float(wm.real) + log_ratio
    with np.errstate(over="ignore", under="ignore"):
        core = float(np.exp(log_core))

    q = build_polynomial(spec).log_normalized
    n = np.arange(N + 1)
    _, terms = lp.scaled_terms(q, np.array([wm]))
    mk = magnetization_powers(spec.spins, spec.nonlinearity)
    drift = complex((mk * terms[0]).sum() / (n * terms[0]).sum())

    f_ll = 4 * t * t * core
    if zero_drift:
        gamma = spec.beta_gamma / beta
        f_bb = abs(h + gamma * drift) ** 2 * core
        f_lb = 2 * t * gamma * drift.imag * core
    else:
        f_bb = h * h * core
        f_lb = 0.0
    return AtZeroForm(
        qfim=QfimMatrix(f_ll, f_bb, f_lb, "at-zero"),
        zero_index=zero_index,
        log_ratio=log_ratio,
        denominator_phase=phase,
        beta_h=beta_h,
        lambda_t=float((-wm.imag / 2) % math.pi),
        drift=drift,
    )


def qfim_at_zero(spec: ModelSpec, zero_index: int, t: float, beta: float,
                 zero_drift: bool = False, zeros: ZeroSet | None = None) -> QfimMatrix:
    return at_zero_form(spec, zero_index, t, beta, zero_drift, zeros).qfim


def small_beta_gamma_coherence(spec: ModelSpec, lambda_t: float) -> float:
    """|g|^2 ~ 1 - sin^2(lambda t N) / cosh^2(beta h N / 2) when only m = +-N/2 survive."""
    N = spec.spins
    return 1.0 - math.sin(lambda_t * N) ** 2 / math.cosh(spec.beta_h * N / 2) ** 2


def small_beta_gamma_deviations(spec: ModelSpec, lambda_t: float, t: float,
                                beta: float) -> tuple[complex, complex]:
    """(dE_lambda, dE_beta) keeping only the two extreme Dicke levels."""
    N = spec.spins
    bhN, x2 = spec.beta_h * N, 2 * lambda_t * N
    den = math.cosh(bhN) + math.cos(x2)
    h = spec.beta_h / beta
    dl = -t * N * complex(math.sin(x2), -math.sinh(bhN)) / den
    db = 0.5 * h * N * complex(2 * math.sin(lambda_t * N) ** 2 * math.tanh(bhN / 2), math.sin(x2)) / den
    return dl, db


def qfim_small_beta_gamma(spec: ModelSpec, t: float, lam: float, beta: float,
                          branch: str = "mixed") -> QfimMatrix:
    """Two-level-truncation forms for large negative beta*gamma and even k.

    ``valid`` is False outside that regime; the formulas are evaluated anyway.
    """
    if branch not in ("pure", "mixed"):
        raise ValueError(f"branch must be 'pure' or 'mixed', got {branch!r}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    N = spec.spins
    x = lam * t * N
    a = spec.beta_h * N / 2
    h = spec.beta_h / beta
    valid = spec.nonlinearity % 2 == 0 and spec.beta_gamma < 0
    if branch == "mixed":
        f_ll = t ** 2 * N ** 2
        f_bb = 0.25 * h * h * N * N * math.sin(x) ** 2 / math.cosh(a) ** 2
        return QfimMatrix(f_ll, f_bb, 0.0, "approx-mixed", valid)
    f_ll = t ** 2 * N ** 2 * (1 - math.cos(x) ** 2 / math.cosh(a) ** 2)
    f_bb = 0.25 * h * h * N * N * math.sin(x) ** 2 / math.cosh(a) ** 4
    f_lb = 0.5 * h * t * N * N * math.sin(2 * x) * math.sinh(2 * a) / (1 + math.cosh(2 * a)) ** 2
    return QfimMatrix(f_ll, f_bb, f_lb, "approx-pure", valid)

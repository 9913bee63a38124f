"""Log-domain evaluation of polynomials with positive coefficients.

A point z is carried as its complex logarithm w = ln|z| + i*arg(z), which keeps
roots of magnitude e**(+-10000) representable.  Evaluations return a shift M and
scaled terms t_n with P(e**w) = e**M * sum(t_n).
"""

from __future__ import annotations

import math

import numpy as np

EPS = np.finfo(float).eps


def scaled_terms(log_coeff: np.ndarray, w, power_weights: np.ndarray | None = None):
    """Terms of sum_n c_n * e**(n*w), shifted so the largest has modulus 1.

    ``power_weights`` multiplies term n by a nonnegative factor (e.g. n or
    a falling factorial); zero weights drop the term.
    """
    w = np.asarray(w, dtype=complex)
    n = np.arange(log_coeff.shape[-1])
    lc = log_coeff
    if power_weights is not None:
        with np.errstate(divide="ignore"):
            lc = log_coeff + np.log(power_weights)
    a = lc + n * w.real[..., None]
    shift = a.max(axis=-1)
    terms = np.exp(a - shift[..., None] + 1j * (n * w.imag[..., None]))
    return shift, terms


def newton_ratio(log_coeff: np.ndarray, w):
    """Return (u, rel_residual) with u = P(z)/(z P'(z)) at z = e**w.

    rel_residual is |P(z)| / sum_n |c_n z**n|, the componentwise backward error.
    """
    n = np.arange(log_coeff.shape[-1])
    _, t = scaled_terms(log_coeff, w)
    s0 = t.sum(axis=-1)
    s1 = (n * t).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = s0 / s1
    return u, np.abs(s0) / np.abs(t).sum(axis=-1)


def compensated_residual(log_coeff: np.ndarray, w: complex) -> float:
    """Backward error at one point, summing the scaled terms with math.fsum."""
    _, t = scaled_terms(log_coeff, np.array([w]))
    t = t[0]
    re = math.fsum(t.real)
    im = math.fsum(t.imag)
    return math.hypot(re, im) / math.fsum(np.abs(t))


def log_sub(wa, wb):
    """Complex log of e**wa - e**wb (principal branch not guaranteed)."""
    wa = np.asarray(wa, dtype=complex)
    wb = np.asarray(wb, dtype=complex)
    a_big = wa.real >= wb.real
    big = np.where(a_big, wa, wb)
    small = np.where(a_big, wb, wa)
    with np.errstate(divide="ignore"):
        core = big + np.log1p(-np.exp(small - big))
    # e**wa - e**wb = -(e**wb - e**wa) when wb is the larger one
    return np.where(a_big, core, core + 1j * np.pi)


def log_abs_sub(wa, wb):
    """log|e**wa - e**wb|."""
    return np.real(log_sub(wa, wb))


def wrap_angle(x):
    return (np.asarray(x) + np.pi) % (2 * np.pi) - np.pi


def log_distance(wa, wb):
    """Distance between two points in log coordinates, angle wrapped."""
    d = np.asarray(wa, dtype=complex) - np.asarray(wb, dtype=complex)
    return np.hypot(d.real, wrap_angle(d.imag))

"""Lee-Yang zeros of the partition polynomial and checks of their structure.

Roots are computed with an Ehrlich-Aberth iteration written in multiplicative
form on w = ln z.  The partition polynomials of interest have roots spread over
hundreds of decades (|z| ~ e**(+-19000) for N=11, k=6, beta*gamma=1), so every
quantity the iteration needs (P/zP', ratios z_j/z_i) is evaluated in log form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _logpoly as lp
from .errors import BracketInvalid, NonConvergence
from .model import ModelSpec, ScaledPolynomial, build_polynomial

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
CLUSTER_TOL = 1e-6
ON_CIRCLE_TOL = 1e-6
MAX_RETRIES = 5
MERGE_ULPS = 6
CONDITION_LIMIT = 1e-12 / lp.EPS


@dataclass(frozen=True, eq=False)
class ZeroSet:
    """Zeros of a partition polynomial, stored through their logarithms."""

    log_zeros: np.ndarray
    residuals: np.ndarray
    multiplicity_clusters: tuple[tuple[int, ...], ...]
    polynomial: ScaledPolynomial
    conjugate_defect: float = 0.0
    iterations: int = 0
    attempts: int = 1

    def __len__(self):
        return len(self.log_zeros)

    @property
    def zeros(self) -> np.ndarray:
        w = self.log_zeros
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            z = np.exp(w)
            # zeros snapped onto the real axis stay exactly real
            z = np.where(w.imag == math.pi, -np.exp(w.real) + 0j, z)
            return np.where(w.imag == 0.0, np.exp(w.real) + 0j, z)

    @property
    def log_norms(self) -> np.ndarray:
        return self.log_zeros.real

    @property
    def norms(self) -> np.ndarray:
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.log_norms)

    def cluster_of(self, index: int) -> tuple[int, ...]:
        for cl in self.multiplicity_clusters:
            if index in cl:
                return cl
        return (index,)

    def multiplicity(self, index: int) -> int:
        return len(self.cluster_of(index))

    def nearest(self, z: complex) -> tuple[int, float]:
        """Index of the zero closest to z and the absolute distance to it."""
        if z == 0:
            i = int(np.argmin(self.log_norms))
            return i, float(self.norms[i])
        wz = complex(np.log(complex(z)))
        d = lp.log_abs_sub(self.log_zeros, wz)
        i = int(np.argmin(d))
        with np.errstate(over="ignore"):
            return i, float(np.exp(d[i]))


@dataclass(frozen=True)
class Theorem1Check:
    applicable: bool
    holds: bool
    residual: float
    pairing_identity: bool


@dataclass(frozen=True)
class CriticalSearchResult:
    beta_gamma_critical: float
    bracket: tuple[float, float]
    deviation_profile: list[tuple[float, float]] = field(default_factory=list)
    on_circle_tol: float = ON_CIRCLE_TOL


def newton_polygon_guesses(log_coeff: np.ndarray, rotation: float = 0.0) -> np.ndarray:
    """Starting points (as logs) on circles read off the upper convex hull.

    Each hull edge from vertex i to j contributes j - i starting points on the
    circle |z| = exp(-slope).
    """
    N = len(log_coeff) - 1
    hull: list[int] = []
    for n in range(N + 1):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or below the chord a -> n
            cross = (b - a) * (log_coeff[n] - log_coeff[a]) - (n - a) * (log_coeff[b] - log_coeff[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(n)
    guesses = []
    sigma = 0.4 + rotation
    for a, b in zip(hull[:-1], hull[1:]):
        count = b - a
        log_r = -(log_coeff[b] - log_coeff[a]) / count
        for j in range(count):
            guesses.append(complex(log_r, 2 * math.pi * j / count + sigma + 2 * math.pi * a / N))
    w = np.array(guesses, dtype=complex)
    w.imag = lp.wrap_angle(w.imag)
    return w


def _aberth(log_q: np.ndarray, w: np.ndarray, max_iter: int):
    N = len(w)
    w = w.copy()
    active = np.ones(N, dtype=bool)
    offdiag = ~np.eye(N, dtype=bool)
    floor = 4 * (N + 1) * lp.EPS
    stalled = 0
    it = 0
    for it in range(1, max_iter + 1):
        u, res = lp.newton_ratio(log_q, w)
        # clustered roots wander at the rounding level without freezing
        stalled = stalled + 1 if np.all(res[active] <= floor) else 0
        if stalled > 3:
            break
        d = w[None, :] - w[:, None]
        ratio = np.exp(np.clip(d.real, -700.0, 700.0) + 1j * d.imag)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(offdiag, 1.0 / (1.0 - ratio), 0.0).sum(axis=1)
            rho = u / (1.0 - u * s)
            step = np.log1p(-rho)
        step = np.where(np.isfinite(step), step, 0.0)
        step.real = np.clip(step.real, -50.0, 50.0)
        w = np.where(active, w + step, w)
        small = np.abs(step) <= 8 * lp.EPS * np.maximum(1.0, np.abs(w))
        active &= ~small
        if not active.any():
            break
    w.imag = lp.wrap_angle(w.imag)
    return w, it


def _union_find(n: int, pairs) -> list[list[int]]:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def _inclusion_log_radii(log_q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """log of N*|P(z_i)| / |p_N prod_{j!=i}(z_i - z_j)| with a rounding floor on |P|."""
    N = len(w)
    shift, t = lp.scaled_terms(log_q, w)
    abs_p = np.abs(t.sum(axis=1)) + 2 * (N + 1) * lp.EPS * np.abs(t).sum(axis=1)
    d = w[None, :] - w[:, None]
    log_one_minus = lp.log_abs_sub(np.zeros_like(d), d)
    np.fill_diagonal(log_one_minus, 0.0)
    log_den = log_q[-1] + (N - 1) * w.real + log_one_minus.sum(axis=1)
    return math.log(N) + shift + np.log(abs_p) - log_den


def _multiple_root(log_q: np.ndarray, noise: np.ndarray, w0: complex, mult: int):
    """Refine a candidate mult-fold root; return its log, or None if it is not one.

    The center is found by Newton on P^(mult-1), where a mult-fold root is
    simple.  It is accepted when every P^(j), j < mult, vanishes there to within
    MERGE_ULPS times the rounding noise of the stored coefficients, i.e. the
    coefficients are consistent with an exact multiple root.  ``noise[n]`` is
    the relative uncertainty of coefficient n in units of eps.
    """
    N = len(log_q) - 1
    with mpmath.workdps(50):
        c = [mpmath.exp(mpmath.mpf(float(x))) for x in log_q]
        deriv = [mpmath.ff(n, mult - 1) * c[n] for n in range(mult - 1, N + 1)][::-1]
        z = mpmath.exp(mpmath.mpc(float(w0.real), float(w0.imag)))
        for _ in range(60):
            p, dp = mpmath.polyval(deriv, z, derivative=True)
            if dp == 0:
                return None
            step = p / dp
            z -= step
            if abs(step) < mpmath.mpf(10) ** -45 * abs(z):
                break
        for j in range(mult):
            terms = [mpmath.ff(n, j) * c[n] * z ** (n - j) for n in range(j, N + 1)]
            bound = mpmath.fsum(abs(t) * noise[n] for n, t in zip(range(j, N + 1), terms))
            if abs(mpmath.fsum(terms)) > MERGE_ULPS * lp.EPS * bound:
                return None
        return complex(mpmath.log(z))


def _merge_clusters(poly: ScaledPolynomial, w: np.ndarray):
    """Collapse clusters that are genuine multiple roots; returns (w, merged mask)."""
    log_q = np.asarray(poly.log_normalized, dtype=float)
    # rounding in forming log c_n and in normalizing it, carried through exp
    noise = 1.0 + np.abs(poly.log_coeff) + abs(poly.scale)
    N = len(w)
    merged = np.zeros(N, dtype=bool)
    if N < 2:
        return w, merged
    lr = _inclusion_log_radii(log_q, w)
    pairs = []
    for i in range(N):
        for j in range(i + 1, N):
            if lp.log_abs_sub(w[i], w[j]) <= np.logaddexp(lr[i], lr[j]):
                pairs.append((i, j))
    w = w.copy()
    for group in _union_find(N, pairs):
        m = len(group)
        if m < 2:
            continue
        anchor = w[group[0]]
        centroid = anchor + np.log(np.mean(np.exp(w[group] - anchor)))
        wc = _multiple_root(log_q, noise, centroid, m)
        if wc is not None:
            w[group] = wc
            merged[group] = True
    return w, merged

def _root_conditions(log_q: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum|c_n z**n| / |z P'(z)|: forward error per unit backward error in ln z."""
    n = np.arange(len(log_q))
    _, t = lp.scaled_terms(log_q, w)
    with np.errstate(divide="ignore"):
        return np.abs(t).sum(axis=-1) / np.abs((n * t).sum(axis=-1))

def _mp_polish(log_q: np.ndarray, w: np.ndarray, movable: np.ndarray, dps: int,
               max_iter: int = 80) -> np.ndarray:
    """Aberth sweeps in extended precision on the polynomial with coefficients exp(log_q).

    Double-precision evaluation cannot separate a tight cluster below about
    eps**(1/size); working with ``dps`` digits recovers the roots of the stored
    coefficients themselves.  Roots outside ``movable`` stay fixed and act as
    deflation terms.
    """
    with mpmath.workdps(dps):
        coeffs = [mpmath.exp(mpmath.mpf(float(c))) for c in log_q[::-1]]
        z = [mpmath.exp(mpmath.mpc(float(wi.real), float(wi.imag))) for wi in w]
        stop = mpmath.mpf(10) ** (-(dps // 2 + 8))
        idx = np.flatnonzero(movable)
        for _ in range(max_iter):
            biggest = mpmath.mpf(0)
            for i in idx:
                p, dp = mpmath.polyval(coeffs, z[i], derivative=True)
                if p == 0:
                    continue
                ratio = p / dp
                denom = 1 - ratio * mpmath.fsum(1 / (z[i] - z[j]) for j in range(len(z)) if j != i)
                step = ratio / denom
                z[i] -= step
                biggest = max(biggest, abs(step) / abs(z[i]))
            if biggest < stop:
                break
        out = w.copy()
        out[idx] = [complex(mpmath.log(z[i])) for i in idx]
        return out

def _symmetrize(w: np.ndarray) -> tuple[np.ndarray, float]:
    """Make the root set exactly closed under conjugation.

    Returns the adjusted logs and the largest pairing distance beforehand.
    """
    cost = lp.log_distance(w[:, None], np.conj(w)[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(w), dtype=int)
    perm[rows] = cols
    defect = float(cost[rows, cols].max())
    if defect > 1e-6 or not np.array_equal(perm[perm], np.arange(len(w))):
        return w, defect
    w = w.copy()
    for i, j in enumerate(perm):
        if i == j:
            w[i] = complex(w[i].real, math.pi if abs(w[i].imag) > math.pi / 2 else 0.0)
        elif i < j:
            target = np.conj(w[j])
            diff = target - w[i]
            mid = w[i] + complex(diff.real, lp.wrap_angle(diff.imag)) / 2
            w[i] = mid
            w[j] = np.conj(mid)
    w.imag = lp.wrap_angle(w.imag)
    # wrap_angle maps pi to -pi; keep negative reals at +pi
    w.imag = np.where(np.isclose(w.imag, -math.pi, rtol=0, atol=1e-15), math.pi, w.imag)
    return w, defect


def _clusters(w: np.ndarray, tol: float) -> tuple[tuple[int, ...], ...]:
    # distance relative to the larger modulus; equals absolute distance near |z| = 1
    N = len(w)
    log_tol = math.log(tol)
    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)
             if lp.log_abs_sub(w[i], w[j]) - max(w[i].real, w[j].real) < log_tol]
    return tuple(tuple(g) for g in _union_find(N, pairs) if len(g) > 1)


def solve_roots(poly: ScaledPolynomial, tol: float = 1e-12, max_iter: int = 500,
                seed: int = 0) -> ZeroSet:
    """All ``poly.degree`` zeros, certified to relative residual <= tol*max(1, |ln z|).

    Retries from rotated starting circles (golden-angle steps) up to five times
    before raising NonConvergence.
    """
    if poly.degree < 1:
        raise ValueError("polynomial degree must be >= 1")
    if not 0 < tol <= 1e-4:
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol!r}")
    log_q = np.asarray(poly.log_normalized, dtype=float)
    worst = math.inf
    for attempt in range(MAX_RETRIES + 1):
        w0 = newton_polygon_guesses(log_q, rotation=(seed + attempt) * GOLDEN_ANGLE)
        w, iters = _aberth(log_q, w0, max_iter)
        if not np.all(np.isfinite(w)):
            continue
        w, merged = _merge_clusters(poly, w)
        free = ~merged
        kappa = float(_root_conditions(log_q, w[free]).max()) if free.any() else 0.0
        if kappa > CONDITION_LIMIT:
            w = _mp_polish(log_q, w, free, dps=30 + 2 * int(math.log10(min(kappa, 1e300))))
        w, defect = _symmetrize(w)
        residuals = np.array([lp.compensated_residual(log_q, wi) for wi in w])
        # ln z carries absolute precision eps*|ln z|, which floors the residual
        worst = float((residuals / np.maximum(1.0, np.abs(w))).max())
        if np.all(np.isfinite(w)) and worst <= tol:
            return ZeroSet(
                log_zeros=w,
                residuals=residuals,
                multiplicity_clusters=_clusters(w, CLUSTER_TOL),
                polynomial=poly,
                conjugate_defect=defect,
                iterations=iters,
                attempts=attempt + 1,
            )
    raise NonConvergence(
        f"Aberth iteration did not reach residual {tol:g} after {MAX_RETRIES + 1} "
        f"attempts (worst residual {worst:.3g})"
    )


def zeros_of(spec: ModelSpec, tol: float = 1e-12, seed: int = 0) -> ZeroSet:
    return solve_roots(build_polynomial(spec), tol=tol, seed=seed)


def verify_theorem1(spec: ModelSpec) -> Theorem1Check:
    """Check that z = -1 is a zero when N is odd and k is even."""
    N, k = spec.spins, spec.nonlinearity
    q = build_polynomial(spec).normalized
    signed = q * np.where(np.arange(N + 1) % 2 == 0, 1.0, -1.0)
    residual = abs(math.fsum(signed)) / float(q.max())
    applicable = N % 2 == 1 and k % 2 == 0
    pairing = all((-1) ** n + (-1) ** (N - n) == 0 for n in range((N - 1) // 2 + 1)) if N % 2 else False
    return Theorem1Check(
        applicable=applicable,
        holds=applicable and pairing and residual < 1e-12,
        residual=residual,
        pairing_identity=pairing,
    )


def vieta_log_norm_product(zeros: ZeroSet, spec: ModelSpec) -> tuple[float, float]:
    """(measured, predicted) values of ln prod |z_i|."""
    measured = math.fsum(zeros.log_norms)
    if spec.nonlinearity % 2:
        predicted = 2 * spec.beta_gamma * (spec.spins / 2) ** spec.nonlinearity
    else:
        predicted = 0.0
    return measured, predicted


def vieta_norm_product(zeros: ZeroSet, spec: ModelSpec) -> tuple[float, float]:
    measured, predicted = vieta_log_norm_product(zeros, spec)
    with np.errstate(over="ignore"):
        return float(np.exp(measured)), float(np.exp(predicted))


def unit_circle_deviation(zeros: ZeroSet) -> float:
    """max_i ||z_i| - 1|."""
    with np.errstate(over="ignore"):
        return float(np.abs(np.expm1(zeros.log_norms)).max())


def _on_circle(spins: int, k: int, beta_gamma: float, tol: float) -> tuple[bool, float]:
    dev = unit_circle_deviation(zeros_of(ModelSpec(spins, k, beta_gamma)))
    return dev < tol, dev


def find_critical_beta_gamma(spins: int, k: int, on_circle_tol: float = ON_CIRCLE_TOL,
                             bracket: tuple[float, float] = (-1.0, 1.0),
                             profile_points: int = 101, width: float = 1e-6) -> CriticalSearchResult:
    """Bisect on beta*gamma for the point where zeros leave the unit circle.

    The indicator is "all zeros within on_circle_tol of |z| = 1"; it must be
    true at the low end of the bracket and false at the high end.
    """
    if k % 2:
        raise ValueError("critical search is defined for even nonlinearity only")
    if profile_points < 100:
        raise ValueError("profile needs at least 100 points")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy low < high")
    lo_in, lo_dev = _on_circle(spins, k, lo, on_circle_tol)
    hi_in, hi_dev = _on_circle(spins, k, hi, on_circle_tol)
    if lo_in == hi_in or not lo_in:
        raise BracketInvalid(
            f"indicator is {lo_in} at beta_gamma={lo} (deviation {lo_dev:.3g}) and "
            f"{hi_in} at beta_gamma={hi} (deviation {hi_dev:.3g})"
        )
    grid = np.linspace(lo, hi, profile_points)
    profile = [(float(b), _on_circle(spins, k, float(b), on_circle_tol)[1]) for b in grid]
    a, b = lo, hi
    while b - a > width:
        mid = 0.5 * (a + b)
        if _on_circle(spins, k, mid, on_circle_tol)[0]:
            a = mid
        else:
            b = mid
    return CriticalSearchResult(
        beta_gamma_critical=0.5 * (a + b),
        bracket=(a, b),
        deviation_profile=profile,
        on_circle_tol=on_circle_tol,
    )

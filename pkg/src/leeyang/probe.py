"""Probe-qubit dynamics and the two zero-detection protocols.

The qubit couples through lambda*Jz*sigma_z, so its coherence is multiplied by
g = Z~/Z with Z~ = Tr exp(-beta*H - 2i*lambda*t*Jz).  In fugacity form Z~ is
the partition polynomial evaluated at z~ = exp(-beta*h - 2i*lambda*t), and |g|
vanishes exactly when z~ hits a Lee-Yang zero.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import minimize, minimize_scalar

from . import _logpoly as lp
from .errors import EmptyScan
from .model import ModelSpec, build_polynomial, partition_value
from .rootfinder import ZeroSet, zeros_of

DETECTION_THRESHOLD = 1e-3
VANISH_TOL = 1e-8
MATCH_TOL = 1e-6
LAMBDA_T_POINTS = 2001
BETA_H_POINTS = 801
BETA_H_RANGE = (-20.0, 20.0)
# coarse local minima above this level are never zero candidates
CANDIDATE_CEILING = 0.5


@dataclass(frozen=True, eq=False)
class QubitState:
    """2x2 density matrix in the {|up>, |down>} basis."""

    entries: np.ndarray

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError(f"qubit state must be 2x2, got shape {rho.shape}")
        if abs(rho[1, 0] - np.conj(rho[0, 1])) > 1e-12 or abs(rho[0, 0].imag) > 1e-12 \
                or abs(rho[1, 1].imag) > 1e-12:
            raise ValueError("qubit state must be Hermitian")
        if abs(rho[0, 0].real + rho[1, 1].real - 1.0) > 1e-12:
            raise ValueError("qubit state must have unit trace")
        p = rho[0, 0].real
        if p < -1e-14 or p > 1 + 1e-14 or p * (1 - p) - abs(rho[0, 1]) ** 2 < -1e-14:
            raise ValueError("qubit state must be positive semidefinite")
        rho[0, 0], rho[1, 1] = rho[0, 0].real, rho[1, 1].real
        rho[1, 0] = np.conj(rho[0, 1])
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @classmethod
    def from_populations(cls, p_up: float, coherence: complex) -> "QubitState":
        return cls(np.array([[p_up, coherence], [np.conj(coherence), 1 - p_up]]))

    @classmethod
    def plus(cls) -> "QubitState":
        """(|up> + |down>)/sqrt(2)."""
        return cls.from_populations(0.5, 0.5)

    @property
    def p_up(self) -> float:
        return float(self.entries[0, 0].real)

    @property
    def coherence(self) -> complex:
        return complex(self.entries[0, 1])

    @property
    def det(self) -> float:
        return self.p_up * (1 - self.p_up) - abs(self.coherence) ** 2


@dataclass(frozen=True)
class QubitSpec:
    omega0: float = 0.0
    initial_state: QubitState = field(default_factory=QubitState.plus)


@dataclass(frozen=True)
class DetectionHit:
    """A refined minimum of |Z~/Z| below the detection threshold."""

    lambda_t: float
    beta_h: float
    amplitude: float
    matched_zero: int | None
    recovered_z: complex
    multiplicity: int = 1

    @property
    def vanishing(self) -> bool:
        return self.amplitude < VANISH_TOL


@dataclass(frozen=True, eq=False)
class JointScan:
    beta_h: np.ndarray
    lambda_t: np.ndarray
    amplitude: np.ndarray  # shape (len(beta_h), len(lambda_t))
    hits: list[DetectionHit]
    predicted: list[tuple[int, float, float]]  # (zero index, beta_h, lambda_t)


def tilde_log_fugacity(beta_h, lambda_t):
    """ln z~ = -beta*h - 2i*lambda*t."""
    return -np.asarray(beta_h, dtype=float) - 2j * np.asarray(lambda_t, dtype=float)


def tilde_partition(spec: ModelSpec, lambda_t: float) -> complex:
    """ln Z~ (real part log-magnitude, imaginary part phase).

    Equals ln Z at lambda_t = 0.  Returns -inf real part exactly at a zero.
    """
    poly = build_polynomial(spec)
    N = spec.spins
    shift, t = lp.scaled_terms(poly.log_normalized, np.array([tilde_log_fugacity(spec.beta_h, lambda_t)]))
    with np.errstate(divide="ignore"):
        core = np.log(t[0].sum())
    return complex((spec.beta_h / 2 + 1j * lambda_t) * N + poly.scale + shift[0] + core)


def coherence_factor(spec: ModelSpec, lambda_t: float) -> complex:
    """g = Z~/Z."""
    with np.errstate(under="ignore"):
        return complex(np.exp(tilde_partition(spec, lambda_t) - partition_value(spec)))


def _amplitude_rows(log_q: np.ndarray, beta_h: np.ndarray, lambda_t: np.ndarray) -> np.ndarray:
    """|Z~/Z| on the grid beta_h x lambda_t, as |sum q_n z~^n| / sum q_n |z~|^n."""
    n = np.arange(len(log_q))
    a = log_q[None, :] - np.outer(beta_h, n)
    w = np.exp(a - a.max(axis=1, keepdims=True))
    phases = np.exp(-2j * np.outer(n, lambda_t))
    return np.abs(w @ phases) / w.sum(axis=1, keepdims=True)


def amplitude_grid(spec: ModelSpec, beta_h, lambda_t, workers: int = 1) -> np.ndarray:
    """Amplitude heatmap; rows are split across ``workers`` threads and merged in order."""
    log_q = build_polynomial(spec).log_normalized
    beta_h = np.atleast_1d(np.asarray(beta_h, dtype=float))
    lambda_t = np.atleast_1d(np.asarray(lambda_t, dtype=float))
    if workers <= 1 or len(beta_h) < 2 * workers:
        return _amplitude_rows(log_q, beta_h, lambda_t)
    chunks = np.array_split(beta_h, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: _amplitude_rows(log_q, c, lambda_t), chunks))
    return np.vstack(parts)


def amplitude_ratio(spec: ModelSpec, lambda_t):
    """|Z~/Z| at spec.beta_h, scalar or array in lambda_t."""
    out = amplitude_grid(spec, [spec.beta_h], lambda_t)[0]
    return float(out[0]) if np.ndim(lambda_t) == 0 else out


def amplitude_ratio_factorized(spec: ModelSpec, lambda_t, zeros: ZeroSet | None = None):
    """|prod(z~ - z_i) / prod(z - z_i)| from a solved zero set."""
    if zeros is None:
        zeros = zeros_of(spec)
    lt = np.atleast_1d(np.asarray(lambda_t, dtype=float))
    wt = tilde_log_fugacity(spec.beta_h, lt)
    wz = complex(-spec.beta_h)
    num = lp.log_abs_sub(wt[:, None], zeros.log_zeros[None, :]).sum(axis=1)
    den = lp.log_abs_sub(wz, zeros.log_zeros).sum()
    with np.errstate(under="ignore"):
        out = np.exp(num - den)
    return float(out[0]) if np.ndim(lambda_t) == 0 else out


def evolved_state(spec: ModelSpec, qubit: QubitSpec, t: float, lam: float, beta: float) -> QubitState:
    """Reduced probe state after time t; populations frozen, coherence times g e^{-i w0 t}."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    rho0 = qubit.initial_state
    g = coherence_factor(spec, lam * t)
    c = g * complex(np.exp(-1j * qubit.omega0 * t)) * rho0.coherence
    # |g| <= 1 analytically; clip rounding so the state stays valid
    if abs(c) > abs(rho0.coherence):
        c *= abs(rho0.coherence) / abs(c)
    return QubitState.from_populations(rho0.p_up, c)


def _match(zeros: ZeroSet, w: complex, tol: float) -> int | None:
    """Index of the zero within relative distance tol of e**w."""
    d = lp.log_abs_sub(zeros.log_zeros, w) - np.maximum(zeros.log_norms, w.real)
    i = int(np.argmin(d))
    return i if d[i] < math.log(tol) else None


def _hit(zeros: ZeroSet, beta_h: float, lambda_t: float, amplitude: float, tol: float) -> DetectionHit:
    lambda_t = float(lambda_t % math.pi)
    w = complex(tilde_log_fugacity(beta_h, lambda_t))
    idx = _match(zeros, w, tol)
    with np.errstate(over="ignore", under="ignore"):
        z = complex(np.exp(w))
    return DetectionHit(lambda_t=lambda_t, beta_h=float(beta_h), amplitude=float(amplitude),
                        matched_zero=idx, recovered_z=z,
                        multiplicity=zeros.multiplicity(idx) if idx is not None else 1)


def _dedupe(hits: list[DetectionHit], zeros: ZeroSet) -> list[DetectionHit]:
    """One hit per matched zero cluster (the deepest); unmatched hits kept if distinct."""
    best: dict = {}
    for h in hits:
        if h.matched_zero is not None:
            key = min(zeros.cluster_of(h.matched_zero))
        else:
            key = (round(h.beta_h, 6), round(h.lambda_t, 6))
        if key not in best or h.amplitude < best[key].amplitude:
            best[key] = h
    return sorted(best.values(), key=lambda h: (h.beta_h, h.lambda_t))


def scan_time(spec: ModelSpec, lambda_t_points: int = LAMBDA_T_POINTS,
              threshold: float = DETECTION_THRESHOLD, zeros: ZeroSet | None = None,
              match_tol: float = MATCH_TOL) -> list[DetectionHit]:
    """Hits of |Z~/Z| over lambda*t in [0, pi] at fixed beta*h.

    Every discrete local minimum is moved onto a solved zero when one lies in
    the same sub-threshold dip, and otherwise refined by golden-section search;
    minima whose refined value is below ``threshold`` are reported.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if lambda_t_points < 3:
        raise ValueError("need at least 3 lambda_t points")
    if zeros is None:
        zeros = zeros_of(spec)
    grid = np.linspace(0.0, math.pi, lambda_t_points)
    amp = amplitude_ratio(spec, grid)
    # the amplitude has period pi, so the grid closes on itself
    left = np.roll(amp[:-1], 1)
    right = np.roll(amp[:-1], -1)
    core = amp[:-1]
    cand = np.flatnonzero((core <= left) & (core <= right) & (core < CANDIDATE_CEILING))
    step = grid[1] - grid[0]
    log_q = build_polynomial(spec).log_normalized
    f = lambda x: amplitude_ratio(spec, float(x))  # noqa: E731
    hits = []
    pinned: dict[int, float] = {}
    for i in cand:
        x0 = grid[i]
        if core[i] < threshold:
            near = int(np.argmin(lp.log_distance(zeros.log_zeros,
                                                 complex(tilde_log_fugacity(spec.beta_h, x0)))))
            done = pinned.get(min(zeros.cluster_of(near)))
            if done is not None and _same_dip(log_q, (spec.beta_h, x0), (spec.beta_h, done),
                                              threshold, (1.0, step)):
                continue  # another sample of a dip already pinned to its zero
            x, val = _snap_to_zero(spec, zeros, log_q, float(x0), float(core[i]), step, threshold)
            if x != x0:
                hit = _hit(zeros, spec.beta_h, x, val, match_tol)
                hits.append(hit)
                if hit.matched_zero is not None and hit.vanishing:
                    pinned[min(zeros.cluster_of(hit.matched_zero))] = hit.lambda_t
                continue
        try:
            res = minimize_scalar(f, bracket=(x0 - step, x0, x0 + step), method="golden",
                                  options={"xtol": 1e-12})
        except ValueError:
            # flat or tied neighbours do not form a strict bracket
            res = minimize_scalar(f, bounds=(x0 - step, x0 + step), method="bounded",
                                  options={"xatol": 1e-12})
        x, val = float(res.x), float(res.fun)
        if val > core[i]:
            x, val = float(x0), float(core[i])
        if val < threshold:
            x, val = _snap_to_zero(spec, zeros, log_q, x, val, step, threshold)
        if val < threshold:
            hits.append(_hit(zeros, spec.beta_h, x, val, match_tol))
    hits = _dedupe(hits, zeros)
    if not hits:
        raise EmptyScan(
            f"no minimum of |Z~/Z| below {threshold:g} for N={spec.spins}, k={spec.nonlinearity}, "
            f"beta_gamma={spec.beta_gamma:g}, beta_h={spec.beta_h:g} "
            f"(smallest sample {amp.min():.3g})"
        )
    return hits


def _newton_zero(log_q: np.ndarray, w: complex, iters: int = 100) -> complex:
    """Newton on u = P/(zP') in w = ln z; quadratic even at multiple roots.

    Returns nan when the iteration leaves the representable range.
    """
    n = np.arange(len(log_q))
    with np.errstate(all="ignore"):
        for _ in range(iters):
            _, t = lp.scaled_terms(log_q, np.array([w]))
            s0, s1, s2 = t[0].sum(), (n * t[0]).sum(), (n * n * t[0]).sum()
            if s0 == 0 or s1 == 0:
                break
            u = s0 / s1
            du = 1 - s0 * s2 / (s1 * s1)
            step = u / du
            if du == 0 or not np.isfinite(step):
                return complex(math.nan, math.nan)
            w = complex(w - step)
            if abs(step) <= 4 * lp.EPS * max(1.0, abs(w)):
                break
    return w


def _angle_gap(a: float, b: float) -> float:
    """Distance between two lambda_t values modulo pi."""
    return abs((a - b + math.pi / 2) % math.pi - math.pi / 2)


def _zero_candidates(zeros: ZeroSet, log_q: np.ndarray, w0: complex):
    """Candidate exact zero locations near w0, as (beta_h, lambda_t) pairs.

    The solved zero nearest to w0 comes first; Newton on the polynomial from w0
    is the fallback.  Near an m-fold zero |Z~/Z| is flat like |dw|**m, so a
    minimizer alone cannot pin the location better than eps**(1/m).
    """
    i = int(np.argmin(lp.log_distance(zeros.log_zeros, w0)))
    out = [zeros.log_zeros[i]]
    w = _newton_zero(log_q, w0)
    if np.isfinite(w):
        out.append(w)
    return [(-float(w.real), float((-w.imag / 2) % math.pi)) for w in out]


def _amplitude_points(log_q: np.ndarray, beta_h: np.ndarray, lambda_t: np.ndarray) -> np.ndarray:
    """|Z~/Z| at the paired points (beta_h[i], lambda_t[i])."""
    n = np.arange(len(log_q))
    a = log_q[None, :] - np.outer(beta_h, n)
    w = np.exp(a - a.max(axis=1, keepdims=True))
    return np.abs((w * np.exp(-2j * np.outer(lambda_t, n))).sum(axis=1)) / w.sum(axis=1)


def _same_dip(log_q: np.ndarray, a: tuple[float, float], b: tuple[float, float],
              threshold: float, cell: tuple[float, float]) -> bool:
    """True when |Z~/Z| stays below threshold on the segment from a to b.

    Near an m-fold zero the sub-threshold dip is wide and flat, so coarse
    minima can sit several cells away from the zero they belong to.
    """
    dbh = b[0] - a[0]
    dlt = (b[1] - a[1] + math.pi / 2) % math.pi - math.pi / 2
    cells = max(abs(dbh) / cell[0], abs(dlt) / cell[1])
    if cells <= 2:
        return True
    f = np.linspace(0.0, 1.0, min(int(4 * cells) + 8, 4000))[1:-1]
    return bool(np.all(_amplitude_points(log_q, a[0] + f * dbh, a[1] + f * dlt) < threshold))


def _snap_to_zero(spec, zeros, log_q, x, val, step, threshold):
    """Move a time-scan minimum onto the zero lying on this |z~| circle, if any."""
    bh = spec.beta_h
    for b, xz in _zero_candidates(zeros, log_q, complex(tilde_log_fugacity(bh, x))):
        if abs(b - bh) > 1e-9 * max(1.0, abs(bh)):
            continue
        if not _same_dip(log_q, (bh, x), (bh, xz), threshold, (1.0, step)):
            continue
        vz = amplitude_ratio(spec, xz)
        if vz < max(val, VANISH_TOL):
            return xz, vz
    return x, val


def _refine_joint(zeros, log_q, bh0, lt0, dbh, dlt, threshold):
    """Refined (beta_h, lambda_t, amplitude) for a coarse minimum at (bh0, lt0)."""
    amp = lambda bh, lt: float(_amplitude_rows(log_q, np.array([bh]), np.array([lt]))[0, 0])  # noqa: E731
    for bh, lt in _zero_candidates(zeros, log_q, complex(tilde_log_fugacity(bh0, lt0))):
        if _same_dip(log_q, (bh0, lt0), (bh, lt), threshold, (dbh, dlt)):
            return bh, lt, amp(bh, lt)
    # no zero in this dip: local minimum of the amplitude inside the cell
    res = minimize(lambda x: amp(x[0], x[1]), x0=[bh0, lt0], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "initial_simplex":
                            [[bh0, lt0], [bh0 + dbh, lt0], [bh0, lt0 + dlt]]})
    return float(res.x[0]), float(res.x[1] % math.pi), float(res.fun)


def scan_joint(spec: ModelSpec, beta_h_range: tuple[float, float] = BETA_H_RANGE,
               beta_h_points: int = BETA_H_POINTS, lambda_t_points: int = LAMBDA_T_POINTS,
               threshold: float = DETECTION_THRESHOLD, zeros: ZeroSet | None = None,
               match_tol: float = MATCH_TOL, workers: int = 1) -> JointScan:
    """Heatmap of |Z~/Z| over (beta*h, lambda*t) plus refined hits.

    spec.beta_h is ignored; beta*h is the scanned axis.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    lo, hi = map(float, beta_h_range)
    if beta_h_points < 1 or lambda_t_points < 3 or (beta_h_points > 1 and not lo < hi):
        raise ValueError("invalid scan grid")
    if zeros is None:
        zeros = zeros_of(spec)
    log_q = build_polynomial(spec).log_normalized
    bh = np.linspace(lo, hi, beta_h_points) if beta_h_points > 1 else np.array([lo])
    lt = np.linspace(0.0, math.pi, lambda_t_points)
    amp = amplitude_grid(spec, bh, lt, workers=workers)

    core = amp[:, :-1]
    # wrap in lambda_t (period pi), clamp in beta_h
    padded = np.concatenate([core[:, -1:], core, core[:, :1]], axis=1)
    local = minimum_filter(padded, size=3, mode="nearest")[:, 1:-1]
    rows, cols = np.nonzero((core <= local) & (core < CANDIDATE_CEILING))
    dbh = bh[1] - bh[0] if len(bh) > 1 else 1.0
    dlt = lt[1] - lt[0]
    hits = []
    pinned: dict[int, tuple[float, float]] = {}
    for r, c in zip(rows, cols):
        if core[r, c] < threshold:
            near = int(np.argmin(lp.log_distance(zeros.log_zeros,
                                                 complex(tilde_log_fugacity(bh[r], lt[c])))))
            done = pinned.get(min(zeros.cluster_of(near)))
            if done is not None and _same_dip(log_q, (bh[r], lt[c]), done, threshold, (dbh, dlt)):
                continue  # another sample of a dip already pinned to its zero
        b, l, a = _refine_joint(zeros, log_q, bh[r], lt[c], dbh, dlt, threshold)
        if a < threshold and lo - dbh <= b <= hi + dbh:
            hit = _hit(zeros, b, l, a, match_tol)
            hits.append(hit)
            if hit.matched_zero is not None and hit.vanishing:
                pinned[min(zeros.cluster_of(hit.matched_zero))] = (hit.beta_h, hit.lambda_t)
    hits = _dedupe(hits, zeros)

    predicted = []
    for i, w in enumerate(zeros.log_zeros):
        if i != min(zeros.cluster_of(i)):
            continue
        b = -float(w.real)
        if lo <= b <= hi:
            predicted.append((i, b, float((-w.imag / 2) % math.pi)))
    return JointScan(beta_h=bh, lambda_t=lt, amplitude=amp, hits=hits, predicted=predicted)

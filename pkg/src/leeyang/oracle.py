"""Brute-force reference computations used only to validate the main path.

Nothing here reuses the log-domain kernels of the library: sums are taken
directly in extended precision, roots come from a companion-matrix eigensolve,
and the probe state is built from the total Hamiltonian level by level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np

from .errors import NonConvergence, SizeExceeded, StencilFailure
from .model import ModelSpec, ScaledPolynomial
from .probe import QubitSpec, QubitState
from .qfim import QfimMatrix
from .rootfinder import ZeroSet

ENUMERATION_LIMIT = 16
COMPANION_LIMIT = 12
EVOLUTION_LIMIT = 64
# ln(max |z| / min |z|) beyond which small eigenvalues drown in rounding
COMPANION_SPAN = 60.0
DPS = 40


@dataclass(frozen=True, eq=False)
class OracleReport:
    quantity: str
    main_value: object
    oracle_value: object
    max_abs_error: float
    max_rel_error: float
    tolerance: float
    passed: bool
    skipped: str = ""

    def to_dict(self) -> dict:
        def enc(v):
            if v is None:
                return None
            a = np.asarray(v)
            if np.iscomplexobj(a):
                return {"re": a.real.tolist(), "im": a.imag.tolist()}
            return a.tolist()
        return {
            "quantity": self.quantity,
            "main_value": enc(self.main_value),
            "oracle_value": enc(self.oracle_value),
            "max_abs_error": self.max_abs_error,
            "max_rel_error": self.max_rel_error,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "skipped": self.skipped,
        }


def compare(quantity: str, main, oracle, tol: float, relative: bool = True) -> OracleReport:
    """Report entrywise agreement; relative errors use max(|oracle|, 1e-300)."""
    a = np.asarray(main, dtype=complex)
    b = np.asarray(oracle, dtype=complex)
    err = np.abs(a - b)
    rel = err / np.maximum(np.abs(b), 1e-300)
    max_abs = float(err.max()) if err.size else 0.0
    max_rel = float(rel.max()) if rel.size else 0.0
    ok = (max_rel if relative else max_abs) <= tol
    return OracleReport(quantity, main, oracle, max_abs, max_rel, tol, bool(ok))


# -- partition sums -----------------------------------------------------------

def product_basis_partition(spec: ModelSpec) -> float:
    """log Z summed over all 2**N spin configurations."""
    N = spec.spins
    if N > ENUMERATION_LIMIT:
        raise SizeExceeded(f"enumeration is limited to N <= {ENUMERATION_LIMIT}, got {N}")
    configs = np.arange(2 ** N)
    n_up = np.zeros(2 ** N, dtype=int)
    for bit in range(N):
        n_up += (configs >> bit) & 1
    jz = (2 * n_up - N) / 2.0
    neg_energy = -(spec.beta_gamma * jz ** spec.nonlinearity + spec.beta_h * jz)
    return float(np.logaddexp.reduce(neg_energy))


def _mp_weights(spec: ModelSpec, lambda_t=0.0):
    """Dicke-level weights C(N,n) exp(-beta*E_n - 2i*lambda*t*m_n) in mpmath."""
    N = spec.spins
    out = []
    for n in range(N + 1):
        m = mpmath.mpf(2 * n - N) / 2
        e = -(mpmath.mpf(spec.beta_gamma) * m ** spec.nonlinearity + mpmath.mpf(spec.beta_h) * m)
        out.append(math.comb(N, n) * mpmath.exp(e - 2j * mpmath.mpf(lambda_t) * m))
    return out


def naive_tilde_partition(spec: ModelSpec, lambda_t: float) -> complex:
    """ln Z~ from a direct extended-precision sum over Dicke levels."""
    with mpmath.workdps(DPS):
        s = mpmath.fsum(_mp_weights(spec, lambda_t))
        return complex(mpmath.log(s))


def naive_log_g(spec: ModelSpec, lambda_t: float) -> complex:
    """ln(Z~/Z) from direct sums."""
    with mpmath.workdps(DPS):
        s = mpmath.fsum(_mp_weights(spec, lambda_t))
        z = mpmath.fsum(_mp_weights(spec, 0.0))
        return complex(mpmath.log(s / z))


# -- companion-matrix roots ----------------------------------------------------

def _balance(a: np.ndarray, sweeps: int = 20) -> np.ndarray:
    """Diagonal similarity making row and column norms comparable."""
    a = a.copy()
    n = len(a)
    for _ in range(sweeps):
        done = True
        for i in range(n):
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            if c == 0 or r == 0:
                continue
            f = 1.0
            while c < r / 2:
                c, r, f = c * 2, r / 2, f * 2
            while c > r * 2:
                c, r, f = c / 2, r * 2, f / 2
            if f != 1.0:
                done = False
                a[i, :] /= f
                a[:, i] *= f
        if done:
            break
    return a


def _givens(a: complex, b: complex):
    r = math.hypot(abs(a), abs(b))
    if r == 0:
        return 1.0, 0j
    return a / r, b / r


def _hessenberg_qr_eigenvalues(h: np.ndarray, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a complex upper Hessenberg matrix by shifted QR with deflation."""
    h = np.array(h, dtype=complex)
    n = len(h)
    eig = np.empty(n, dtype=complex)
    hi = n - 1
    sweeps = 0
    while hi >= 0:
        if hi == 0:
            eig[0] = h[0, 0]
            break
        # find the start of the active unreduced block
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if abs(h[lo, lo - 1]) <= 1e-16 * (s if s > 0 else 1.0):
                h[lo, lo - 1] = 0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = h[hi, hi]
            hi -= 1
            sweeps = 0
            continue
        sweeps += 1
        if sweeps > max_sweeps:
            raise NonConvergence("companion QR iteration did not deflate")
        # Wilkinson shift from the trailing 2x2 block; exceptional shift now and then
        a, b, c, d = h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi]
        tr, det = a + d, a * d - b * c
        disc = np.sqrt(tr * tr / 4 - det)
        mu1, mu2 = tr / 2 + disc, tr / 2 - disc
        mu = mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2
        if sweeps % 11 == 0:
            mu = d + abs(h[hi, hi - 1]) * (0.75 + 0.5j)
        blk = slice(lo, hi + 1)
        m = hi - lo + 1
        sub = h[blk, blk] - mu * np.eye(m)
        rots = []
        for k in range(m - 1):
            cs, sn = _givens(sub[k, k], sub[k + 1, k])
            g = np.array([[np.conj(cs), np.conj(sn)], [-sn, cs]])
            sub[k:k + 2, :] = g @ sub[k:k + 2, :]
            rots.append(g)
        for k, g in enumerate(rots):
            sub[:, k:k + 2] = sub[:, k:k + 2] @ g.conj().T
        h[blk, blk] = sub + mu * np.eye(m)
    return eig


def root_modulus_span(log_coeff: np.ndarray) -> float:
    """ln of the ratio of largest to smallest root modulus, from the Newton polygon."""
    lq = np.asarray(log_coeff, dtype=float)
    hull = [0]
    for i in range(1, len(lq)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (lq[b] - lq[a]) * (i - a) <= (lq[i] - lq[a]) * (b - a):
                hull.pop()
            else:
                break
        hull.append(i)
    slopes = [(lq[b] - lq[a]) / (b - a) for a, b in zip(hull, hull[1:])]
    return float(max(slopes) - min(slopes)) if slopes else 0.0


def companion_roots(poly: ScaledPolynomial) -> ZeroSet:
    """Roots as eigenvalues of the balanced companion matrix; unpolished."""
    N = poly.degree
    if N > COMPANION_LIMIT:
        raise SizeExceeded(f"companion oracle is limited to degree <= {COMPANION_LIMIT}, got {N}")
    lq = np.asarray(poly.log_coeff, dtype=float)
    span = root_modulus_span(lq)
    if span > COMPANION_SPAN:
        raise SizeExceeded(f"root moduli span e**{span:.1f}; companion eigenvalues cannot resolve "
                           f"more than e**{COMPANION_SPAN:g}")
    # substitute z = s*y so that the scaled polynomial has equal end coefficients
    log_s = (lq[0] - lq[N]) / N
    ly = lq + np.arange(N + 1) * log_s
    with np.errstate(over="ignore"):
        c = np.exp(ly - ly[N])  # monic in y
    if not np.all(np.isfinite(c)):
        raise SizeExceeded("coefficient range exceeds double precision after scaling")
    comp = np.zeros((N, N), dtype=complex)
    comp[0, :] = -c[N - 1::-1]
    for i in range(1, N):
        comp[i, i - 1] = 1.0
    y = _hessenberg_qr_eigenvalues(_balance(comp))
    log_z = np.log(y.astype(complex)) + log_s
    q = np.exp(ly - ly.max())
    residuals = np.array([abs(np.polyval(q[::-1], yi)) / np.polyval(q[::-1], abs(yi)) for yi in y])
    order = np.lexsort((np.abs(y), np.angle(y)))
    return ZeroSet(log_zeros=log_z[order], residuals=residuals[order],
                   multiplicity_clusters=(), polynomial=poly)


# -- probe evolution -------------------------------------------------------------

def full_evolution(spec: ModelSpec, qubit: QubitSpec, t: float, lam: float, beta: float,
                   omega0: float | None = None) -> QubitState:
    """Tr_bath[exp(-i H_tot t) (rho0 x rho_th) exp(i H_tot t)] level by level.

    H_tot = H + (w0/2) sigma_z + lambda Jz sigma_z is diagonal in |s> x |n>, so
    each block picks up the phase exp(-i (E_{s,n} - E_{s',n}) t).
    """
    N = spec.spins
    if N > EVOLUTION_LIMIT:
        raise SizeExceeded(f"full evolution is limited to N <= {EVOLUTION_LIMIT}, got {N}")
    if not beta > 0:
        raise ValueError("beta must be positive")
    w0 = qubit.omega0 if omega0 is None else omega0
    rho0 = qubit.initial_state.entries
    sigma = (1, -1)
    with mpmath.workdps(DPS):
        weights = _mp_weights(spec)
        zsum = mpmath.fsum(weights)
        gamma = mpmath.mpf(spec.beta_gamma) / beta
        h = mpmath.mpf(spec.beta_h) / beta
        out = np.zeros((2, 2), dtype=complex)
        for a in range(2):
            for b in range(2):
                acc = []
                for n in range(N + 1):
                    m = mpmath.mpf(2 * n - N) / 2
                    e_sys = gamma * m ** spec.nonlinearity + h * m
                    ea = e_sys + mpmath.mpf(w0) / 2 * sigma[a] + mpmath.mpf(lam) * m * sigma[a]
                    eb = e_sys + mpmath.mpf(w0) / 2 * sigma[b] + mpmath.mpf(lam) * m * sigma[b]
                    acc.append(weights[n] * mpmath.expj(-(ea - eb) * t))
                out[a, b] = complex(mpmath.fsum(acc) / zsum * mpmath.mpc(rho0[a, b]))
    return QubitState(out)


# -- finite differences ------------------------------------------------------------

def finite_difference(func: Callable[[float, float], object], point: tuple[float, float],
                      step: float = 1e-5) -> tuple[np.ndarray, np.ndarray]:
    """Centered first derivatives of func(lambda, beta) with relative steps.

    The lambda step is ``step * max(1, |lambda|)``, likewise for beta.
    """
    if not 1e-8 <= step <= 1e-3:
        raise ValueError(f"step must lie in [1e-8, 1e-3], got {step!r}")
    lam, beta = map(float, point)
    hl = step * max(1.0, abs(lam))
    hb = step * max(1.0, abs(beta))
    stencil = [(lam + hl, beta), (lam - hl, beta), (lam, beta + hb), (lam, beta - hb)]
    vals = []
    for p in stencil:
        try:
            vals.append(np.asarray(func(*p), dtype=complex))
        except Exception as exc:  # any failure at a stencil point is fatal
            raise StencilFailure(f"evaluation failed at (lambda, beta) = {p}: {exc}") from exc
    return (vals[0] - vals[1]) / (2 * hl), (vals[2] - vals[3]) / (2 * hb)


def _spec_at(spec: ModelSpec, beta0: float, beta: float, freeze_zeros: bool) -> ModelSpec:
    if freeze_zeros:
        return spec.with_beta_h(spec.beta_h * beta / beta0)
    return spec.rescaled(beta / beta0)


def fd_log_g(spec: ModelSpec, t: float, lam: float, beta: float, step: float = 1e-5,
             freeze_zeros: bool = False) -> tuple[complex, complex]:
    """(d ln g / d lambda, d ln g / d beta) by centered differences of direct sums."""
    f = lambda l, b: naive_log_g(_spec_at(spec, beta, b, freeze_zeros), l * t)  # noqa: E731
    dl, db = finite_difference(f, (lam, beta), step)
    return complex(dl), complex(db)


def _bloch(rho: np.ndarray) -> np.ndarray:
    return np.array([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])


def fd_qfim(spec: ModelSpec, qubit: QubitSpec, t: float, lam: float, beta: float,
            step: float = 1e-5, freeze_zeros: bool = False, pure_tol: float = 1e-12) -> QfimMatrix:
    """QFIM from differenced Bloch vectors of the brute-force evolved state.

    F_ab = da r . db r + (r . da r)(r . db r) / (1 - |r|^2); the second term is
    dropped for a pure state.
    """
    def bloch_at(l, b):
        return _bloch(full_evolution(_spec_at(spec, beta, b, freeze_zeros), qubit, t, l, b).entries)

    r = bloch_at(lam, beta)
    dl, db = finite_difference(bloch_at, (lam, beta), step)
    dl, db = dl.real, db.real
    deficit = 1.0 - float(r @ r)
    f = np.array([[dl @ dl, dl @ db], [db @ dl, db @ db]])
    regime = "pure"
    if deficit > pure_tol:
        proj = np.array([r @ dl, r @ db])
        f = f + np.outer(proj, proj) / deficit
        regime = "mixed"
    return QfimMatrix(float(f[0, 0]), float(f[1, 1]), float(f[0, 1]), regime)

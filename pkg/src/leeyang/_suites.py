"""Property suites and the oracle matrix behind ``leeyang verify``."""

from __future__ import annotations

import math
from itertools import product

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _logpoly as lp
from .errors import LeeYangError, SizeExceeded
from .model import ModelSpec, build_polynomial, partition_value
from .oracle import (compare, companion_roots, fd_log_g, fd_qfim, full_evolution,
                     naive_tilde_partition, product_basis_partition, OracleReport)
from .probe import QubitSpec, QubitState, evolved_state, tilde_partition
from .qfim import energy_deviations, qfim_exact
from .rootfinder import (unit_circle_deviation, verify_theorem1, vieta_log_norm_product,
                         zeros_of)

DESK_N = range(1, 11)
DESK_K = range(1, 6)
DESK_BETA_GAMMA = (-5.0, -1.0, -0.05, 0.0, 0.05, 1.0)
DESK_BETA_H = (-2.0, 0.0, 0.7)


def _skip(quantity: str, reason: str) -> OracleReport:
    return OracleReport(quantity, None, None, math.nan, math.nan, math.nan, True, skipped=reason)


def matched_log_distance(wa: np.ndarray, wb: np.ndarray) -> float:
    """Largest relative distance |z_a/z_b - 1| under the best one-to-one matching."""
    cost = np.abs(np.expm1(np.clip(wa[:, None] - wb[None, :], -700, 700)))
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def spec_reports(spec: ModelSpec) -> list[OracleReport]:
    """All oracle comparisons for one desk-matrix spec."""
    out = []
    log_z = partition_value(spec)
    out.append(compare("log_partition", log_z, product_basis_partition(spec),
                       1e-12 * max(1.0, abs(log_z)), relative=False))
    lt = 0.37
    d = tilde_partition(spec, lt) - naive_tilde_partition(spec, lt)
    out.append(compare("tilde_partition_ratio", complex(np.exp(d)), 1.0, 1e-10))
    qubit = QubitSpec(omega0=0.8, initial_state=QubitState.from_populations(0.6, 0.3 + 0.35j))
    a = evolved_state(spec, qubit, 1.3, 0.6, 1.0).entries
    b = full_evolution(spec, qubit, 1.3, 0.6, 1.0).entries
    out.append(compare("evolved_state", a, b, 1e-12, relative=False))
    out.append(root_report(spec))
    return out


def root_report(spec: ModelSpec, tol: float = 1e-6) -> OracleReport:
    zs = zeros_of(spec)
    if zs.multiplicity_clusters:
        return _skip("roots_vs_companion", "multiple root: eigenvalues only resolve eps**(1/m)")
    try:
        comp = companion_roots(build_polynomial(spec))
    except (SizeExceeded, LeeYangError) as exc:
        return _skip("roots_vs_companion", str(exc))
    dist = matched_log_distance(zs.log_zeros, comp.log_zeros)
    return OracleReport("roots_vs_companion", zs.zeros, comp.zeros, dist, dist, tol, dist <= tol)


def desk_matrix():
    return [ModelSpec(N, k, bg, bh) for N, k, bg, bh in
            product(DESK_N, DESK_K, DESK_BETA_GAMMA, DESK_BETA_H)]


def theorem1_suite() -> list[dict]:
    rows = []
    for N, k, bg in product((1, 3, 5, 7, 9, 11), (2, 4, 6), (-1.0, -0.05, 0.05, 1.0)):
        spec = ModelSpec(N, k, bg)
        chk = verify_theorem1(spec)
        _, dist = zeros_of(spec).nearest(-1.0)
        rows.append({"N": N, "k": k, "beta_gamma": bg, "residual": chk.residual,
                     "pairing_identity": chk.pairing_identity, "distance_to_minus_one": dist,
                     "pass": bool(chk.holds and dist < 1e-8)})
    return rows


def vieta_suite(odd: bool, draws: int = 50, seed: int = 0) -> list[dict]:
    """Norm product of the zeros for odd k (off the circle) or even k (product 1)."""
    rng = np.random.default_rng(seed)
    ks = (1, 3, 5) if odd else (2, 4, 6)
    rows = []
    for _ in range(draws):
        N = int(rng.integers(1, 11))
        k = int(rng.choice(ks))
        bg = float(rng.uniform(1e-3, 1.0) * rng.choice((-1.0, 1.0)))
        spec = ModelSpec(N, k, bg)
        zs = zeros_of(spec)
        measured, predicted = vieta_log_norm_product(zs, spec)
        rel = abs(math.expm1(measured - predicted))
        row = {"N": N, "k": k, "beta_gamma": bg, "log_product": measured,
               "log_predicted": predicted, "rel_error": rel}
        ok = rel < 1e-8
        if odd:
            dev = unit_circle_deviation(zs)
            row["unit_circle_deviation"] = dev
            ok = ok and dev > 1e-10
        row["pass"] = bool(ok)
        rows.append(row)
    return rows


def theorem4_suite() -> list[dict]:
    rows = []
    for N, k in product(range(3, 9), (2, 4, 6)):
        zs = zeros_of(ModelSpec(N, k, -5.0))
        targets = np.log(np.exp(1j * math.pi * (2 * np.arange(N) + 1) / N))
        dist = max(float(np.min(np.abs(np.exp(targets) - z))) for z in zs.zeros)
        dev = unit_circle_deviation(zs)
        rows.append({"N": N, "k": k, "beta_gamma": -5.0, "max_distance": dist,
                     "unit_circle_deviation": dev, "pass": bool(dist < 1e-3 and dev < 1e-6)})
    return rows


def conjugate_pairing(zs) -> float:
    cost = lp.log_distance(zs.log_zeros[:, None], np.conj(zs.log_zeros)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def random_qubit(rng: np.random.Generator) -> QubitSpec:
    p = float(rng.uniform(0.05, 0.95))
    r = float(rng.uniform(0.1, 0.95)) * math.sqrt(p * (1 - p))
    c = r * complex(np.exp(1j * rng.uniform(0, 2 * math.pi)))
    return QubitSpec(omega0=float(rng.uniform(-2, 2)), initial_state=QubitState.from_populations(p, c))


def evolution_draws(draws: int = 200, seed: int = 1) -> list[dict]:
    """Analytic evolved state against the literal total-Hamiltonian evolution."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(draws):
        spec = ModelSpec(int(rng.integers(1, 11)), int(rng.integers(1, 6)),
                         float(rng.choice(DESK_BETA_GAMMA)), float(rng.choice(DESK_BETA_H)))
        qubit = random_qubit(rng)
        t, lam, beta = (float(rng.uniform(0, 3)), float(rng.uniform(-2, 2)),
                        float(rng.uniform(0.2, 3)))
        a = evolved_state(spec, qubit, t, lam, beta).entries
        b = full_evolution(spec, qubit, t, lam, beta).entries
        err = float(np.abs(a - b).max())
        rows.append({"N": spec.spins, "k": spec.nonlinearity, "beta_gamma": spec.beta_gamma,
                     "beta_h": spec.beta_h, "t": t, "lambda": lam, "beta": beta,
                     "max_abs_error": err, "pass": err <= 1e-12})
    return rows


def _qfim_rel_error(a, b) -> float:
    """Largest entrywise error relative to the largest entry of the reference."""
    x, y = a.as_array(), b.as_array()
    return float(np.abs(x - y).max() / max(np.abs(y).max(), 1e-300))


def fd_draws(draws: int = 50, seed: int = 2) -> list[dict]:
    """qfim_exact and energy deviations against finite differences of brute-force sums."""
    rng = np.random.default_rng(seed)
    rows = []
    while len(rows) < draws:
        spec = ModelSpec(int(rng.integers(1, 9)), int(rng.integers(1, 6)),
                         float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
        qubit = random_qubit(rng)
        t, lam, beta = (float(rng.uniform(0.2, 2)), float(rng.uniform(0.1, 2)),
                        float(rng.uniform(0.5, 2)))
        main = qfim_exact(spec, qubit, t, lam, beta)
        ref = fd_qfim(spec, qubit, t, lam, beta)
        if ref.regime != main.regime:
            continue  # the two branches are not continuous at the purity switch
        dev = energy_deviations(spec, lam * t, t, beta)
        dl, db = fd_log_g(spec, t, lam, beta)
        de_err = max(abs(dev.dE_lambda - dl) / max(1.0, abs(dl)),
                     abs(dev.dE_beta - db) / max(1.0, abs(db)))
        q_err = _qfim_rel_error(main, ref)
        rows.append({"N": spec.spins, "k": spec.nonlinearity, "beta_gamma": spec.beta_gamma,
                     "beta_h": spec.beta_h, "t": t, "lambda": lam, "beta": beta,
                     "regime": main.regime, "qfim_rel_error": q_err, "dE_error": de_err,
                     "pass": q_err <= 1e-5 and de_err <= 1e-6})
    return rows

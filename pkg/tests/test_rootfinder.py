import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from leeyang import _logpoly as lp
from leeyang.errors import BracketInvalid, NonConvergence
from leeyang.model import ModelSpec, build_polynomial
from leeyang.oracle import companion_roots
from leeyang.rootfinder import (find_critical_beta_gamma, solve_roots, unit_circle_deviation,
                                verify_theorem1, vieta_log_norm_product, vieta_norm_product,
                                zeros_of)


def _by_argument(z):
    return z[np.lexsort((np.abs(z), np.angle(z)))]


def test_triple_root_of_linear_limit():
    zs = zeros_of(ModelSpec(3, 2, 0.0))
    np.testing.assert_allclose(zs.zeros, -1.0, atol=1e-12)
    assert zs.multiplicity_clusters == ((0, 1, 2),)
    assert zs.multiplicity(1) == 3


def test_negative_limit_approaches_roots_of_one_plus_z_to_the_n():
    zs = zeros_of(ModelSpec(4, 4, -5.0))
    targets = np.exp(1j * math.pi * (2 * np.arange(4) + 1) / 4)
    for z in zs.zeros:
        assert np.min(np.abs(targets - z)) < 1e-6


def test_matches_companion_eigenvalues():
    spec = ModelSpec(4, 3, 0.05)
    a = _by_argument(zeros_of(spec).zeros)
    b = _by_argument(companion_roots(build_polynomial(spec)).zeros)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=0)


@pytest.mark.parametrize("N,k,bg", [(7, 4, 0.05), (7, 2, -0.3)])
def test_theorem1_holds(N, k, bg):
    chk = verify_theorem1(ModelSpec(N, k, bg))
    assert chk.applicable and chk.holds and chk.pairing_identity
    assert chk.residual < 1e-12
    _, dist = zeros_of(ModelSpec(N, k, bg)).nearest(-1.0)
    assert dist < 1e-8


def test_theorem1_not_applicable_for_even_n():
    chk = verify_theorem1(ModelSpec(6, 4, 0.05))
    assert not chk.applicable and not chk.holds
    assert chk.residual > 1e-3


def test_vieta_odd_k_prediction():
    spec = ModelSpec(3, 3, 0.1)
    measured, predicted = vieta_norm_product(zeros_of(spec), spec)
    assert predicted == pytest.approx(math.exp(0.675), rel=1e-15)
    assert measured == pytest.approx(predicted, rel=1e-12)


def test_vieta_even_k_prediction():
    spec = ModelSpec(6, 4, 0.05)
    measured, predicted = vieta_log_norm_product(zeros_of(spec), spec)
    assert predicted == 0.0
    assert abs(measured) < 1e-12


def test_vieta_at_zero_coupling():
    spec = ModelSpec(5, 3, 0.0)
    measured, predicted = vieta_norm_product(zeros_of(spec), spec)
    assert predicted == 1.0
    assert measured == pytest.approx(1.0, abs=1e-12)


def test_unit_circle_deviation_examples():
    assert unit_circle_deviation(zeros_of(ModelSpec(4, 2, -0.5))) < 1e-8
    assert unit_circle_deviation(zeros_of(ModelSpec(4, 4, -5.0))) < 1e-6
    # pigeonhole on the norm product e^{0.675} over three zeros
    assert unit_circle_deviation(zeros_of(ModelSpec(3, 3, 0.1))) >= math.exp(0.675 / 3) - 1


def test_k_equals_one_is_a_single_shifted_multiple_root():
    # Z ~ (1 + e^{-bg} z)^N: one N-fold zero at -e^{bg}
    for N, bg in ((6, 0.4), (80, 0.7)):
        zs = zeros_of(ModelSpec(N, 1, bg))
        assert len(zs.multiplicity_clusters) == 1 and len(zs.multiplicity_clusters[0]) == N
        np.testing.assert_allclose(zs.zeros, -math.exp(bg), rtol=1e-12)


@pytest.mark.parametrize("N,k,bg", [(10, 4, 0.05), (12, 5, -1.0), (9, 6, 1.0), (10, 2, 1e-3),
                                    (40, 3, 0.01), (60, 4, -0.02)])
def test_residual_certification_and_structure(N, k, bg):
    spec = ModelSpec(N, k, bg)
    zs = zeros_of(spec, tol=1e-12)
    assert len(zs) == N
    assert sum(len(c) for c in zs.multiplicity_clusters) + sum(
        1 for i in range(N) if zs.multiplicity(i) == 1) == N
    log_q = build_polynomial(spec).log_normalized
    res = np.array([lp.compensated_residual(log_q, w) for w in zs.log_zeros])
    assert np.all(res / np.maximum(1.0, np.abs(zs.log_zeros)) <= 1e-12)
    # conjugate pairing as a perfect matching, by relative distance |w/conj(w') - 1|
    w = zs.log_zeros
    cost = np.abs(np.expm1(np.clip(w[:, None] - np.conj(w)[None, :], -50, 50)))
    r, c = linear_sum_assignment(cost)
    assert cost[r, c].max() < 1e-8


def test_tolerance_is_validated():
    poly = build_polynomial(ModelSpec(4, 2, 0.1))
    with pytest.raises(ValueError):
        solve_roots(poly, tol=1e-3)
    with pytest.raises(ValueError):
        solve_roots(poly, tol=0.0)


def test_nonconvergence_is_raised_not_returned():
    with pytest.raises(NonConvergence):
        solve_roots(build_polynomial(ModelSpec(10, 5, 0.3)), tol=1e-12, max_iter=1)


def test_seed_changes_start_but_not_roots():
    spec = ModelSpec(8, 3, 0.2)
    a = _by_argument(zeros_of(spec, seed=0).zeros)
    b = _by_argument(zeros_of(spec, seed=3).zeros)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_critical_search_matches_dense_sweep():
    res = find_critical_beta_gamma(3, 4)
    assert res.bracket[1] - res.bracket[0] <= 1e-6
    assert res.beta_gamma_critical < 0.6
    assert len(res.deviation_profile) >= 100
    grid = np.round(np.arange(-1.0, 1.0 + 5e-4, 1e-3), 12)
    on = [unit_circle_deviation(zeros_of(ModelSpec(3, 4, float(b)))) < 1e-6 for b in grid]
    first_off = grid[on.index(False)]
    assert all(on[: on.index(False)])
    assert first_off - 1e-3 - 1e-9 <= res.beta_gamma_critical <= first_off + 1e-9


def test_critical_exists_for_six_spins():
    res = find_critical_beta_gamma(6, 4)
    lo, hi = res.bracket
    assert unit_circle_deviation(zeros_of(ModelSpec(6, 4, lo))) < 1e-6
    assert unit_circle_deviation(zeros_of(ModelSpec(6, 4, hi))) > 1e-6


def test_critical_bracket_without_transition():
    with pytest.raises(BracketInvalid):
        find_critical_beta_gamma(4, 2, bracket=(-1.0, -0.1))


def test_critical_rejects_odd_k():
    with pytest.raises(ValueError):
        find_critical_beta_gamma(4, 3)


def test_critical_three_spins_matches_closed_form():
    # Z = (1+z)(a z^2 + (b-a) z + a) with b/a = 3 e^{5 bg}: the quadratic keeps its
    # zeros on |z| = 1 iff |b - a| <= 2a, i.e. bg <= 0
    res = find_critical_beta_gamma(3, 4)
    assert abs(res.beta_gamma_critical) <= 1e-6

import math

import numpy as np
import pytest
from scipy.stats import binom

from logitdyn import (GameSpecError, all_logit_kernel, cw_alpha_y_bound, cw_bounds, cw_game,
                      cw_kappa, cw_lumped_kernel, kappa_matrix, stationary_by_solve)
from logitdyn.curie_weiss import (EXPONENTIAL, OPEN, POLYNOMIAL, cw_log_alpha_sum, cw_potential,
                                  cw_regime, diff_pushforward, diff_values, log_q)
from logitdyn.mixing import exact_mixing_time


def _diff_and_hamming(n):
    g = cw_game(n)
    X = g.space.profiles
    d = (2 * X - 1).sum(axis=1)
    H = (X[:, None, :] != X[None, :, :]).sum(axis=2)
    return g, d, H


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_cw_kappa_matches_generic(n):
    g, d, H = _diff_and_hamming(n)
    K = kappa_matrix(g)
    ref = np.vectorize(lambda a, b, h: cw_kappa(n, int(a), int(b), int(h)))(d[:, None], d[None, :], H)
    assert np.max(np.abs(K - ref)) < 1e-12


def test_cw_kappa_examples():
    n = 5
    for dx in diff_values(n):
        assert cw_kappa(n, int(dx), int(dx), 0) == n - dx * dx == 2 * cw_potential(n, int(dx))
    g, d, H = _diff_and_hamming(6)
    opposite = d[:, None] * d[None, :] <= 0
    assert np.all(kappa_matrix(g)[opposite] >= -6 - 1e-12)


def test_cw_kappa_infeasible():
    with pytest.raises(GameSpecError, match="feasible range"):
        cw_kappa(4, 4, 4, 1)
    with pytest.raises(GameSpecError):
        cw_kappa(4, 3, 1, 0)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_lumped_matches_pushforward(n):
    for beta in (0.25, 0.5, 1.0):
        K = all_logit_kernel(cw_game(n), beta)
        full = stationary_by_solve(K, method="gth").probs
        lumped = cw_lumped_kernel(n, beta).stationary().probs
        assert np.max(np.abs(diff_pushforward(full, n) - lumped)) < 1e-8


def test_lumped_kernel_rows_match_full_chain():
    n, beta = 5, 0.7
    g = cw_game(n)
    P = all_logit_kernel(g, beta).matrix
    plus = g.space.profiles.sum(axis=1)
    L = cw_lumped_kernel(n, beta).kernel
    for x in range(g.space.size):
        row = np.bincount(plus, weights=P[x], minlength=n + 1)
        assert np.max(np.abs(row - L[plus[x]])) < 1e-12


def test_lumped_beta_zero_binomial_and_symmetry():
    n = 7
    L = cw_lumped_kernel(n, 0.0).kernel
    assert np.allclose(L, binom.pmf(np.arange(n + 1), n, 0.5)[None, :], atol=1e-14)
    L = cw_lumped_kernel(n, 1.3).kernel
    assert np.allclose(L, L[::-1, ::-1], atol=1e-14)


def test_lumped_tmix_equals_full():
    n, beta = 6, 0.5
    K = all_logit_kernel(cw_game(n), beta)
    full = exact_mixing_time(K, stationary_by_solve(K, method="gth").probs).t_mix_exact
    chain = cw_lumped_kernel(n, beta)
    lumped = exact_mixing_time(chain.kernel, chain.stationary().probs).t_mix_exact
    assert lumped <= full
    assert lumped == full


def test_alpha_y_examples():
    for n in (3, 4, 6):
        assert all(cw_alpha_y_bound(n, 0.0, int(d)) == pytest.approx(-n * math.log(2)) for d in diff_values(n))
        assert cw_alpha_y_bound(n, 1.0, n) == pytest.approx(n * log_q(n, 1.0))
    with pytest.raises(GameSpecError):
        cw_alpha_y_bound(4, 1.0, 3)


@pytest.mark.parametrize("beta", [0.5, 1.0])
def test_alpha_y_column_bound_exhaustive(beta):
    n = 4
    g, d, _ = _diff_and_hamming(n)
    P = all_logit_kernel(g, beta).matrix
    col_min = P.min(axis=0)
    bound = np.array([math.exp(cw_alpha_y_bound(n, beta, int(dy))) for dy in d])
    assert np.all(col_min >= bound * (1 - 1e-12))
    assert math.exp(cw_log_alpha_sum(n, beta)) <= col_min.sum() * (1 + 1e-12)


@pytest.mark.parametrize("n", [4, 6])
@pytest.mark.parametrize("beta", [0.25, 0.5, 1.0])
def test_bound_sandwich(n, beta):
    K = all_logit_kernel(cw_game(n), beta)
    t = exact_mixing_time(K, stationary_by_solve(K, method="gth").probs).t_mix_exact
    b = cw_bounds(n, beta)
    assert math.exp(b.log_lower) <= t
    assert t <= math.exp(b.log_upper_general)
    assert t <= math.exp(b.log_upper_column_sum)
    if b.highbeta_applicable:
        assert t <= math.exp(b.log_upper_highbeta)


def test_bounds_beta_zero():
    b = cw_bounds(5, 0.0)
    assert math.exp(b.log_upper_general) == pytest.approx(math.log(4) * 6)
    assert b.log_upper_column_sum == 0.0


def test_regime_flags():
    for n in (4, 10, 50):
        assert cw_regime(n, 2 * math.log(n) / n ** 2) == POLYNOMIAL
        assert cw_regime(n, 2 * math.log(4) / n) == EXPONENTIAL
        assert cw_regime(n, 1 / n) in (OPEN, POLYNOMIAL)
    assert cw_regime(50, 1 / 50) == OPEN


def test_highbeta_applicability():
    assert cw_bounds(10, 2.0).highbeta_applicable
    assert not cw_bounds(10, 0.01).highbeta_applicable


def test_bad_n():
    with pytest.raises(GameSpecError):
        cw_game(1)

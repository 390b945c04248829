import math

import numpy as np
import pytest

from logitdyn import (all_logit_kernel, all_logit_stationary_closed_form, bipartite_product_identity,
                      gibbs, one_logit_kernel, partition_functions, stationary_by_solve)
from logitdyn.stationary import Distribution, marginal_on

from helpers import (coordination_pair, oracle_stationary, path3, prisoners_dilemma, random_lig,
                     random_bipartite_lig, triangle)


def test_gibbs_examples():
    g = coordination_pair()
    pi = gibbs(g, 1.0).probs
    # coordinated profiles outweigh mixed ones by e^{beta * (a - d)} = e^2
    ref = math.exp(2) / (2 * math.exp(2) + 2)
    assert pi[0] == pytest.approx(ref, abs=1e-12) and pi[3] == pytest.approx(ref, abs=1e-12)
    assert pi[0] == pytest.approx(0.4404, abs=1e-4)
    assert np.max(np.abs(stationary_by_solve(one_logit_kernel(g, 1.0), method="gth").probs - pi)) < 1e-14
    assert np.allclose(gibbs(triangle(), 0.0).probs, 1 / 8)


def test_closed_form_examples():
    assert np.allclose(all_logit_stationary_closed_form(coordination_pair(), 1.7).probs, 0.25, atol=1e-12)
    beta = 1.0
    p = q = 1 / (1 + math.exp(2 * beta))
    den = (1 + p - q) ** 2
    ref = np.array([(1 - q) ** 2, p * (1 - q), p * (1 - q), p * p]) / den
    assert np.max(np.abs(all_logit_stationary_closed_form(prisoners_dilemma(), beta).probs - ref)) < 1e-12


def test_route_agreement_random_games():
    rng = np.random.default_rng(17)
    for seed in range(50):
        n = int(rng.integers(2, 5))
        g = random_lig(rng, n, sizes=rng.integers(2, 4, size=n))
        for beta in (0.0, 0.3, 1.0, 3.0):
            pi1 = gibbs(g, beta).probs
            assert np.max(np.abs(stationary_by_solve(one_logit_kernel(g, beta)).probs - pi1)) < 1e-8
            piA = all_logit_stationary_closed_form(g, beta).probs
            assert np.max(np.abs(stationary_by_solve(all_logit_kernel(g, beta)).probs - piA)) < 1e-8


def test_solver_methods_agree_with_eigenvector_oracle():
    rng = np.random.default_rng(1)
    g = random_lig(rng, 3, sizes=[3, 2, 3])
    P = all_logit_kernel(g, 2.0).matrix
    ref = oracle_stationary(P)
    for method in ("power", "solve", "gth"):
        assert np.max(np.abs(stationary_by_solve(P, method=method).probs - ref)) < 1e-10


def test_doubly_stochastic_kernel_uniform():
    P = np.array([[0.2, 0.5, 0.3], [0.3, 0.2, 0.5], [0.5, 0.3, 0.2]])
    assert np.allclose(stationary_by_solve(P).probs, 1 / 3, atol=1e-12)


def test_power_iteration_falls_back_to_linear_solve():
    P = all_logit_kernel(triangle(), 3.0).matrix
    ref = oracle_stationary(P)
    assert np.max(np.abs(stationary_by_solve(P, max_iter=1).probs - ref)) < 1e-10


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        stationary_by_solve(np.eye(2), method="qr")


def test_partition_functions():
    g = triangle()
    pf = partition_functions(g, 0.0)
    assert pf.z1 == pytest.approx(8) and pf.zA == pytest.approx(64)
    pf = partition_functions(path3(), 1.0)
    assert abs(pf.log_ratio) < 1e-12
    tri = partition_functions(triangle(), 1.0)
    assert abs(tri.log_ratio) > 1e-3


def test_partition_function_overflow_flag():
    g = triangle(a=100.0, b=100.0, c=-100.0, d=-100.0)
    pf = partition_functions(g, 6.0)
    assert pf.overflow and pf.z1 is None and math.isfinite(pf.log_z1)


def test_product_identity_examples():
    assert bipartite_product_identity(coordination_pair(), [0], 1.0) < 1e-9
    assert bipartite_product_identity(path3(), [1], 2.0) < 1e-9
    assert bipartite_product_identity(path3(), [1], 0.0) < 1e-15


def test_product_identity_random_bipartite():
    rng = np.random.default_rng(8)
    for _ in range(10):
        g, left = random_bipartite_lig(rng, 5, sizes=rng.integers(2, 4, size=5))
        for beta in (0.3, 1.0):
            assert bipartite_product_identity(g, left, beta) < 1e-9


def test_marginal_on_sums():
    rng = np.random.default_rng(0)
    g = random_lig(rng, 3, sizes=[2, 3, 2])
    pi = gibbs(g, 1.0)
    m = marginal_on(pi, g.space, [1])
    X = g.space.profiles
    for s in range(3):
        assert np.allclose(m[X[:, 1] == s], pi.probs[X[:, 1] == s].sum())


def test_distribution_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        Distribution(np.array([0.5, 0.6]))
    d = gibbs(triangle(), 1.0)
    p = tmp_path / "pi.csv"
    d.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "index,profile,probability,log_probability"
    assert len(lines) == 9
    assert float(lines[1].split(",")[2]) == d.probs[0]

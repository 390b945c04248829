import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logitdyn import (LocalInteractionGame, Observable, PairPermutation, StrategySpace,
                      all_logit_stationary_closed_form, bipartite_mu, bipartiting_weight, diff,
                      expectation, gibbs, invariance_gap, monoc, verify_decomposition,
                      verify_observable_decomposable)
from logitdyn.errors import GameSpecError
from logitdyn.observables import all_bipartitions, bipartite_mu_for

from helpers import (coordination_pair, graph_coordination, path3, prisoners_dilemma, profiles,
                     random_bipartite_lig, random_lig, spins, triangle)


def test_diff_examples():
    assert diff((1,) * 5) == 5
    assert diff((0, 1, 0)) == -1
    with pytest.raises(GameSpecError):
        diff((0, 2))


def test_curie_weiss_potential_through_diff():
    from logitdyn.curie_weiss import cw_game
    g = cw_game(4)
    d = Observable.diff(g.space).values
    assert np.allclose(g.potential_table(), -(d ** 2 - 4) / 2, atol=1e-12)


def test_monoc_examples():
    assert monoc(triangle(), (1, 1, 1)) == 3.0
    assert monoc(coordination_pair(), (0, 1)) == 0.0
    rng = np.random.default_rng(3)
    g = random_lig(rng, 5)
    obs = Observable.monoc(g).values
    for k, x in enumerate(profiles(g.space)):
        plus = sum(x[u] == 1 and x[v] == 1 for u, v in g.edge_pairs)
        minus = sum(x[u] == 0 and x[v] == 0 for u, v in g.edge_pairs)
        assert obs[k] == plus - minus == monoc(g, x)


def test_expectation_examples():
    g = coordination_pair()
    assert expectation(np.full(4, 2.5), gibbs(g, 1.0)) == pytest.approx(2.5)
    d = Observable.diff(g.space)
    assert abs(expectation(d, gibbs(g, 1.0))) < 1e-15
    assert abs(expectation(d, all_logit_stationary_closed_form(g, 1.0))) < 1e-15
    pd = prisoners_dilemma()
    confessing = (pd.space.profiles == 0).sum(axis=1)
    for beta in (0.5, 1.0, 3.0):
        e1 = expectation(confessing, gibbs(pd, beta))
        eA = expectation(confessing, all_logit_stationary_closed_form(pd, beta))
        assert abs(e1 - eA) < 1e-9


def test_bipartite_mu_examples():
    space = StrategySpace((2, 2))
    mu = bipartite_mu(space, [0])
    assert all(mu.mu1[k, k] == k == mu.mu2[k, k] for k in range(4))
    x, y = space.index((0, 0)), space.index((1, 1))
    assert space.profile(int(mu.mu1[x, y])) == (0, 1)
    assert space.profile(int(mu.mu2[x, y])) == (1, 0)


def test_pair_permutation_validation():
    ident = PairPermutation.identity(4)
    with pytest.raises(ValueError):
        PairPermutation(ident.mu1, ident.mu1.copy())
    with pytest.raises(ValueError):
        PairPermutation(np.zeros((2, 2), dtype=int), np.zeros((2, 2), dtype=int))
    mu = bipartite_mu(StrategySpace((2, 2, 3)), [1])
    assert np.array_equal(mu.compose(mu).mu1, PairPermutation.identity(12).mu1)


def test_bipartite_mu_for_rejects_non_bipartite():
    with pytest.raises(GameSpecError):
        bipartite_mu_for(triangle(), [0])


def test_verify_decomposition():
    assert verify_decomposition(bipartite_mu(path3().space, [1]), path3()) < 1e-9
    rng = np.random.default_rng(5)
    for _ in range(10):
        g, left = random_bipartite_lig(rng, 5, sizes=rng.integers(2, 4, size=5))
        assert verify_decomposition(bipartite_mu_for(g, left), g) < 1e-9
    tri = triangle()
    cert = bipartiting_weight(tri)
    assert verify_decomposition(bipartite_mu(tri.space, cert.left), tri) <= 2 * cert.removed_weight + 1e-9
    assert verify_decomposition(PairPermutation.identity(8), tri) > 0.1


def test_observable_decomposability():
    rng = np.random.default_rng(2)
    g, left = random_bipartite_lig(rng, 5)
    mu = bipartite_mu_for(g, left)
    assert verify_observable_decomposable(Observable.diff(g.space), mu) < 1e-12
    assert verify_observable_decomposable(Observable.monoc(g), mu) < 1e-12
    two = coordination_pair()
    d2 = Observable.diff(two.space).values ** 2
    assert verify_observable_decomposable(d2, bipartite_mu(two.space, [0])) > 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5))
def test_mu_is_involutive_and_swap_equivariant(seed, n):
    rng = np.random.default_rng(seed)
    space = StrategySpace(tuple(int(s) for s in rng.integers(1, 4, size=n)))
    left = sorted(rng.choice(n, size=int(rng.integers(1, n)), replace=False).tolist())
    mu = bipartite_mu(space, left)
    twice = mu.compose(mu)
    ident = PairPermutation.identity(space.size)
    assert np.array_equal(twice.mu1, ident.mu1) and np.array_equal(twice.mu2, ident.mu2)
    assert np.array_equal(mu.mu1.T, mu.mu2)
    # coordinatewise multiset {x_u, y_u} is preserved
    X = space.profiles
    a, b = X[mu.mu1], X[mu.mu2]
    assert np.array_equal(np.sort(np.stack([a, b]), axis=0),
                          np.sort(np.stack([np.broadcast_to(X[:, None], a.shape),
                                            np.broadcast_to(X[None, :], a.shape)]), axis=0))


def test_bipartiting_weight_examples():
    assert bipartiting_weight(path3()).removed_weight == 0.0
    g = triangle()
    w = g.edges[0].spread
    cert = bipartiting_weight(g)
    assert cert.removed_weight == pytest.approx(w) and cert.exact and len(cert.removed_edges) == 1
    c5 = graph_coordination(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])
    assert bipartiting_weight(c5).removed_weight == pytest.approx(w)
    assert bipartiting_weight(LocalInteractionGame.build([2, 2])).removed_weight == 0.0


def test_bipartiting_weight_matches_brute_force():
    rng = np.random.default_rng(21)
    for _ in range(10):
        g = random_lig(rng, 5, p_edge=0.8)
        w = {p: e.spread for p, e in zip(g.edge_pairs, g.edges)}
        best = min(sum(s for (u, v), s in w.items() if (u in L) == (v in L))
                   for L in map(set, all_bipartitions(5)))
        assert bipartiting_weight(g).removed_weight == pytest.approx(best)
        heur = bipartiting_weight(g, exact_budget=0, restarts=30)
        assert not heur.exact and heur.removed_weight >= best - 1e-12


def test_invariance_gap_bipartite():
    rng = np.random.default_rng(9)
    for _ in range(10):
        g, _ = random_bipartite_lig(rng, 5)
        for obs in (Observable.diff(g.space), Observable.monoc(g)):
            gap = invariance_gap(g, obs, 1.0)
            assert gap.alpha == 0 and gap.bound_pass
            assert abs(gap.one_logit - gap.all_logit) < 1e-8


@pytest.mark.parametrize("beta", [0.5, 1.0])
def test_invariance_sandwich_triangle(beta):
    g = triangle()
    obs = Observable.diff(g.space).shifted(3.0)
    gap = invariance_gap(g, obs, beta)
    assert gap.alpha == pytest.approx(2 * bipartiting_weight(g).removed_weight)
    assert gap.bound_pass is True
    assert gap.lower <= gap.all_logit <= gap.upper


def test_invariance_gap_not_applicable():
    g = triangle()
    gap = invariance_gap(g, Observable.diff(g.space).shifted(-10.0), 1.0)
    assert gap.bound_pass is None
    d2 = Observable.diff(coordination_pair().space).values ** 2
    assert invariance_gap(coordination_pair(), d2, 1.0).decomposable is False


def test_observable_csv(tmp_path):
    space = StrategySpace((2, 2))
    p = tmp_path / "o.csv"
    p.write_text("index,value\n0,1.5\n1,2\n2,3\n3,-4\n")
    assert Observable.from_csv(p, space).values.tolist() == [1.5, 2.0, 3.0, -4.0]
    p.write_text("index,value\n0,1.5\n")
    with pytest.raises(GameSpecError):
        Observable.from_csv(p, space)


def test_spins_helper_consistent():
    g = triangle()
    assert np.array_equal(Observable.diff(g.space).values, spins(g.space).sum(axis=1))

"""Game generators and brute-force oracles shared by the test suite.

The oracles deliberately avoid the package's vectorized code paths: they loop
over profiles with itertools and evaluate definitions directly.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from logitdyn import EdgeGame, LocalInteractionGame, StrategySpace, TableGame

# PASS/FAIL lines from the acceptance suite, printed by the conftest summary hook
ACCEPTANCE_RESULTS: list[str] = []


def coordination_pair(a=1.0, b=1.0, c=-1.0, d=-1.0) -> LocalInteractionGame:
    return LocalInteractionGame.build([2, 2], [EdgeGame.coordination(0, 1, a, b, c, d)])


def prisoners_dilemma() -> LocalInteractionGame:
    return coordination_pair(a=0.0, b=3.0, c=5.0, d=-2.0)


def graph_coordination(n: int, pairs, a=1.0, b=1.0, c=-1.0, d=-1.0) -> LocalInteractionGame:
    return LocalInteractionGame.build([2] * n, [EdgeGame.coordination(u, v, a, b, c, d) for u, v in pairs])


def triangle(**kw) -> LocalInteractionGame:
    return graph_coordination(3, [(0, 1), (1, 2), (0, 2)], **kw)


def path3(**kw) -> LocalInteractionGame:
    return graph_coordination(3, [(0, 1), (1, 2)], **kw)


def random_edge(rng, u, v, mu, mv, scale=1.0) -> EdgeGame:
    """Exact potential edge game with payoffs that are not pure potential."""
    phi = rng.normal(scale=scale, size=(mu, mv))
    g = rng.normal(size=mv)
    h = rng.normal(size=mu)
    return EdgeGame(u, v, -phi + g[None, :], -phi + h[:, None])


def random_lig(rng, n, sizes=None, p_edge=0.7, pairs=None, scale=1.0) -> LocalInteractionGame:
    sizes = [2] * n if sizes is None else list(sizes)
    if pairs is None:
        pairs = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p_edge]
    edges = [random_edge(rng, u, v, sizes[u], sizes[v], scale) for u, v in pairs]
    return LocalInteractionGame.build(sizes, edges)


def random_bipartite_lig(rng, n, sizes=None, p_edge=0.7):
    left = [v for v in range(n) if rng.random() < 0.5] or [0]
    if len(left) == n:
        left = left[:-1]
    right = [v for v in range(n) if v not in left]
    pairs = [(u, v) for u in left for v in right if rng.random() < p_edge] or [(left[0], right[0])]
    return random_lig(rng, n, sizes, pairs=sorted(tuple(sorted(p)) for p in pairs)), left


def spins(space: StrategySpace) -> np.ndarray:
    return 2 * space.profiles - 1


def three_way_table(rng, n, coef=None) -> tuple[TableGame, float]:
    """Potential of a random local interaction game plus c * s_0 s_1 s_2, |c| >= 0.5."""
    base = random_lig(rng, n)
    if coef is None:
        coef = float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0))
    s = spins(base.space)
    trio = rng.choice(n, size=3, replace=False)
    phi = base.potential_table() + coef * s[:, trio].prod(axis=1)
    return TableGame.from_potential(base.space, phi), coef


def profiles(space: StrategySpace):
    return list(itertools.product(*[range(m) for m in space.sizes]))


# ---- oracles -------------------------------------------------------------


def oracle_utility(game: LocalInteractionGame, i, x) -> float:
    total = 0.0
    for e in game.edges:
        if e.u == i:
            total += e.payoff_u[x[e.u], x[e.v]]
        elif e.v == i:
            total += e.payoff_v[x[e.u], x[e.v]]
    return total


def oracle_choice(game, i, x, beta) -> list[float]:
    w = []
    for s in range(game.space.sizes[i]):
        z = list(x)
        z[i] = s
        w.append(math.exp(beta * game.utility(i, z)))
    tot = sum(w)
    return [v / tot for v in w]


def oracle_all_logit(game, beta) -> np.ndarray:
    profs = profiles(game.space)
    P = np.zeros((len(profs), len(profs)))
    for a, x in enumerate(profs):
        choices = [oracle_choice(game, i, x, beta) for i in range(game.n)]
        for b, y in enumerate(profs):
            P[a, b] = math.prod(choices[i][y[i]] for i in range(game.n))
    return P


def oracle_tmix(P, pi, eps=0.25, t_max=100000) -> int:
    Pt = np.eye(P.shape[0])
    for t in range(1, t_max + 1):
        Pt = Pt @ P
        if 0.5 * np.abs(Pt - pi[None, :]).sum(axis=1).max() <= eps:
            return t
    raise AssertionError("oracle t_mix above t_max")


def oracle_stationary(P) -> np.ndarray:
    w, V = np.linalg.eig(P.T)
    k = int(np.argmin(np.abs(w - 1)))
    v = np.real(V[:, k])
    return v / v.sum()

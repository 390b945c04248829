"""Observables, bipartite decompositions and the one-logit / all-logit expectation gap."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import config
from .dynamics import kappa_matrix
from .errors import GameSpecError
from .game import Game, LocalInteractionGame, StrategySpace, bipartition_sides
from .stationary import all_logit_stationary_closed_form, gibbs

DIFF = "Diff"
MONOC = "MonoC"


def _spins(space: StrategySpace) -> np.ndarray:
    if any(s != 2 for s in space.sizes):
        raise GameSpecError("Diff and MonoC need binary strategy sets (index 0 = -1, 1 = +1)")
    return 2 * space.profiles - 1


def diff(x: Sequence[int]) -> int:
    """Sum of spins of a binary profile given by strategy indices."""
    x = np.asarray(x)
    if np.any((x != 0) & (x != 1)):
        raise GameSpecError(f"profile {tuple(x)} is not binary")
    return int((2 * x - 1).sum())


def monoc(game: LocalInteractionGame, x: Sequence[int]) -> float:
    """Half-sum of x_u + x_v over the edges, spins in {-1, +1}."""
    s = 2 * np.asarray(game.space.validate(x)) - 1
    if any(m != 2 for m in game.space.sizes):
        raise GameSpecError("MonoC needs binary strategy sets")
    return 0.5 * float(sum(s[u] + s[v] for u, v in game.edge_pairs))


@dataclass(frozen=True, eq=False)
class Observable:
    """Real-valued table over the flat profile order."""

    values: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("observable values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def shifted(self, c: float) -> "Observable":
        return Observable(self.values + c, f"{self.name}{c:+g}")

    @classmethod
    def diff(cls, space: StrategySpace) -> "Observable":
        return cls(_spins(space).sum(axis=1), DIFF)

    @classmethod
    def monoc(cls, game: LocalInteractionGame) -> "Observable":
        s = _spins(game.space)
        vals = np.zeros(game.space.size)
        for u, v in game.edge_pairs:
            vals += 0.5 * (s[:, u] + s[:, v])
        return cls(vals, MONOC)

    @classmethod
    def from_csv(cls, path, space: StrategySpace) -> "Observable":
        vals = np.full(space.size, np.nan)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for row in reader:
                if not row or row[0].strip().lower() in ("index", "#"):
                    continue
                try:
                    vals[int(row[0])] = float(row[1])
                except (ValueError, IndexError) as exc:
                    raise GameSpecError(f"{path}: bad observable row {row} ({exc})") from None
        if np.any(np.isnan(vals)):
            raise GameSpecError(f"{path}: observable missing values for some profiles")
        return cls(vals, str(path))


def expectation(obs, dist) -> float:
    """<O, pi> = sum_x O(x) pi(x)."""
    o, p = np.asarray(obs, dtype=float), np.asarray(dist, dtype=float)
    if o.shape != p.shape:
        raise ValueError(f"observable has {o.size} entries, distribution {p.size}")
    return float(o @ p)


@dataclass(frozen=True, eq=False)
class PairPermutation:
    """Map (x, y) -> (mu1[x, y], mu2[x, y]) on flat profile indices."""

    mu1: np.ndarray
    mu2: np.ndarray

    def __post_init__(self):
        m = self.mu1.shape[0]
        if self.mu1.shape != (m, m) or self.mu2.shape != (m, m):
            raise ValueError("pair permutation tables must be square and equal-shaped")
        if not (np.array_equal(self.mu1, self.mu2.T)):
            raise ValueError("pair permutation is not swap-equivariant")
        codes = self.mu1.reshape(-1).astype(np.int64) * m + self.mu2.reshape(-1)
        if np.unique(codes).size != m * m:
            raise ValueError("pair map is not a bijection of S x S")

    @property
    def size(self) -> int:
        return self.mu1.shape[0]

    def compose(self, other: "PairPermutation") -> "PairPermutation":
        """Apply self first, then other."""
        return PairPermutation(other.mu1[self.mu1, self.mu2], other.mu2[self.mu1, self.mu2])

    @classmethod
    def identity(cls, size: int) -> "PairPermutation":
        x = np.arange(size)
        return cls(np.broadcast_to(x[:, None], (size, size)).copy(),
                   np.broadcast_to(x[None, :], (size, size)).copy())


def bipartite_mu(space: StrategySpace, left: Sequence[int]) -> PairPermutation:
    """mu1(x, y) = (x_L, y_R), mu2(x, y) = (y_L, x_R).

    ``left`` is one side L of the bipartition; the other side is its
    complement. Validation against a graph is done by the callers that have
    one (``bipartite_mu_for``).
    """
    X = space.profiles
    in_left = np.zeros(space.n, dtype=bool)
    in_left[list(left)] = True
    a_left = (X[:, in_left] * space.strides[in_left]).sum(axis=1)
    a_right = (X[:, ~in_left] * space.strides[~in_left]).sum(axis=1)
    mu1 = a_left[:, None] + a_right[None, :]
    return PairPermutation(mu1, mu1.T.copy())


def bipartite_mu_for(game: LocalInteractionGame, left: Sequence[int]) -> PairPermutation:
    left, _ = bipartition_sides(game, left)
    return bipartite_mu(game.space, left)


def verify_decomposition(mu: PairPermutation, game: Game) -> float:
    """Max |K(x, y) - Phi(mu1) - Phi(mu2)|; mu is an alpha-decomposition for any alpha >= this."""
    K = kappa_matrix(game)
    phi = game.potential_table()
    return float(np.max(np.abs(K - phi[mu.mu1] - phi[mu.mu2])))


def verify_observable_decomposable(obs, mu: PairPermutation) -> float:
    """Max |O(x) + O(y) - O(mu1) - O(mu2)|."""
    o = np.asarray(obs, dtype=float)
    return float(np.max(np.abs(o[:, None] + o[None, :] - o[mu.mu1] - o[mu.mu2])))


@dataclass(frozen=True)
class BipartitionCertificate:
    left: tuple[int, ...]
    right: tuple[int, ...]
    removed_edges: tuple[tuple[int, int], ...]
    removed_weight: float
    exact: bool


def edge_weights(game: LocalInteractionGame) -> np.ndarray:
    return np.array([e.spread for e in game.edges])


def _removed_weight(sides: np.ndarray, U: np.ndarray, V: np.ndarray, w: np.ndarray) -> np.ndarray:
    same = sides[..., U] == sides[..., V]
    return same @ w


def bipartiting_weight(game: LocalInteractionGame, exact_budget: int = 20,
                       restarts: int = 20, seed: int = 0) -> BipartitionCertificate:
    """Minimum total spread of edges whose removal leaves a bipartite graph.

    Exact (all side assignments with vertex 0 fixed on the left) when
    n <= exact_budget; otherwise a randomized single-flip local search whose
    result is only an upper bound, flagged by ``exact=False``.
    """
    n = game.n
    pairs = game.edge_pairs
    w = edge_weights(game)
    if not pairs:
        return BipartitionCertificate(tuple(range(n)), (), (), 0.0, True)
    U = np.array([p[0] for p in pairs])
    V = np.array([p[1] for p in pairs])
    if n <= exact_budget:
        best_w, best_sides = np.inf, None
        total = 1 << (n - 1)
        chunk = 1 << 16
        bits = np.arange(n - 1)
        for start in range(0, total, chunk):
            codes = np.arange(start, min(total, start + chunk))
            sides = np.zeros((codes.size, n), dtype=bool)
            sides[:, 1:] = (codes[:, None] >> bits) & 1
            weights = _removed_weight(sides, U, V, w)
            k = int(np.argmin(weights))
            if weights[k] < best_w:
                best_w, best_sides = float(weights[k]), sides[k]
        exact = True
    else:
        rng = np.random.default_rng(seed)
        best_w, best_sides = np.inf, None
        for _ in range(restarts):
            sides = rng.random(n) < 0.5
            cur = float(_removed_weight(sides, U, V, w))
            improved = True
            while improved:
                improved = False
                for v in range(n):
                    sides[v] = ~sides[v]
                    trial = float(_removed_weight(sides, U, V, w))
                    if trial < cur - 1e-12:
                        cur, improved = trial, True
                    else:
                        sides[v] = ~sides[v]
            if cur < best_w:
                best_w, best_sides = cur, sides.copy()
        exact = False
    left = tuple(int(v) for v in np.flatnonzero(~best_sides))
    right = tuple(int(v) for v in np.flatnonzero(best_sides))
    removed = tuple(p for p, s in zip(pairs, best_sides[U] == best_sides[V]) if s)
    return BipartitionCertificate(left, right, removed, best_w, exact)


class InvarianceGap(NamedTuple):
    one_logit: float
    all_logit: float
    alpha: float
    decomposable: bool
    bound_pass: bool | None
    lower: float | None
    upper: float | None

    def to_dict(self) -> dict:
        return self._asdict()


def invariance_gap(game: LocalInteractionGame, obs, beta: float,
                   atol: float = 1e-8, exact_budget: int = 20) -> InvarianceGap:
    """Compare <O, pi_1> with <O, pi_A>.

    With a minimum-weight bipartiting edge set B removed, the bipartite map mu
    is an alpha-decomposition with alpha = 2 * weight(B). When alpha = 0 and
    O is decomposed by mu, the two expectations must agree within atol
    (relative, absolute atol * 1e-2 near zero). Otherwise the sandwich
    exp(-2 alpha beta) <O, pi_1> <= <O, pi_A> <= exp(2 alpha beta) <O, pi_1>
    is evaluated, and only when <O, pi_1> > 0; ``bound_pass`` is None when it
    does not apply.
    """
    cert = bipartiting_weight(game, exact_budget)
    mu = bipartite_mu(game.space, cert.left)
    o = np.asarray(obs, dtype=float)
    e1 = expectation(o, gibbs(game, beta))
    eA = expectation(o, all_logit_stationary_closed_form(game, beta))
    alpha = 2.0 * cert.removed_weight
    decomposable = verify_observable_decomposable(o, mu) <= config.ATOL * max(1.0, np.abs(o).max())
    if not decomposable:
        return InvarianceGap(e1, eA, alpha, False, None, None, None)
    if alpha == 0.0:
        ok = abs(e1 - eA) <= max(atol * abs(e1), atol * 1e-2)
        return InvarianceGap(e1, eA, alpha, True, ok, e1, e1)
    if e1 <= 0:
        return InvarianceGap(e1, eA, alpha, True, None, None, None)
    lo, hi = np.exp(-2 * alpha * beta) * e1, np.exp(2 * alpha * beta) * e1
    return InvarianceGap(e1, eA, alpha, True, bool(lo <= eA <= hi), float(lo), float(hi))


def all_bipartitions(n: int):
    """Every left side containing vertex 0 (for brute-force oracles)."""
    for r in range(n):
        for rest in itertools.combinations(range(1, n), r):
            yield (0,) + rest

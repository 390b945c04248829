"""Logit choice, cumulative utility, the K function and the two logit kernels.

For a potential game the all-logit kernel can be written three ways, all of
which are exposed through ``all_logit_kernel(..., form=...)``:

* product form   P(x, y) = prod_i sigma_i(y_i | x)
* utility form   P(x, y) = exp(beta U(x, y)) / T(x)
* K form         P(x, y) = exp(-beta K(x, y)) / gamma_A(x)
"""
from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import log_softmax
from scipy.sparse import csr_matrix

from . import config
from .errors import CapExceeded
from .game import EdgeGame, Game, Profile, StrategySpace

ONE_LOGIT = "one-logit"
ALL_LOGIT = "all-logit"
KINDS = (ONE_LOGIT, ALL_LOGIT)


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Dense row-stochastic matrix over the flat profile order."""

    matrix: np.ndarray
    beta: float
    kind: str
    space: StrategySpace | None = None

    def __post_init__(self):
        P = np.asarray(self.matrix, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"kernel must be square, got shape {P.shape}")
        if self.kind not in KINDS and self.kind != "custom":
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if np.any(P < 0):
            raise ValueError("kernel has negative entries")
        row_err = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
        if row_err > config.ATOL:
            raise ValueError(f"kernel rows do not sum to 1 (max error {row_err:.3g})")
        P.setflags(write=False)
        object.__setattr__(self, "matrix", P)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# beta={self.beta!r} kind={self.kind}\n")
            writer = csv.writer(fh)
            for row in self.matrix:
                writer.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> "TransitionKernel":
        with open(path, newline="") as fh:
            header = fh.readline().lstrip("#").split()
            meta = dict(item.split("=", 1) for item in header)
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
        return cls(np.array(rows), float(meta["beta"]), meta["kind"])


def check_beta(beta: float) -> float:
    beta = float(beta)
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and nonnegative, got {beta}")
    return beta


def _check_exponent(game: Game, beta: float) -> None:
    U = game.utility_tables()
    shape = game.space.shape
    spread = max(
        (float(np.max(np.ptp(U[i].reshape(shape), axis=i))) for i in range(game.n)), default=0.0)
    if beta * spread > config.MAX_EXPONENT:
        raise ValueError(
            f"beta={beta} with utility spread {spread:.3g} exceeds the supported exponent "
            f"range ({config.MAX_EXPONENT}); choice probabilities would underflow")


def log_choice_tables(game: Game, beta: float) -> list[np.ndarray]:
    """Per player, log sigma_i(s | x) as an array of shape |S|-by-axes.

    Entry ``L[i][x]`` is log sigma_i(x_i | x with x_i ignored); it does not
    depend on the i-th coordinate of x except through the chosen strategy.
    """
    beta = check_beta(beta)
    _check_exponent(game, beta)
    U = game.utility_tables()
    shape = game.space.shape
    return [log_softmax(beta * U[i].reshape(shape), axis=i) for i in range(game.n)]


def logit_choice(game: Game, i: int, x: Sequence[int], beta: float) -> np.ndarray:
    """Distribution of player i's next strategy from profile x."""
    space = game.space
    i = space.player_index(i)
    x = space.validate(x)
    beta = check_beta(beta)
    U = game.utility_tables()
    base = space.index(x) - x[i] * space.strides[i]
    utils = U[i, base + np.arange(space.sizes[i]) * space.strides[i]]
    z = beta * utils
    w = np.exp(z - z.max())
    return w / w.sum()


def cumulative_utility(game: Game, x: Sequence[int], y: Sequence[int]) -> float:
    """U(x, y) = sum_i u_i(x_-i, y_i)."""
    space = game.space
    x, y = space.validate(x), space.validate(y)
    total = 0.0
    for i in range(space.n):
        z = list(x)
        z[i] = y[i]
        total += game.utility(i, z)
    return float(total)


def _check_matrix_cap(space: StrategySpace, cap: int | None) -> None:
    cap = config.MATRIX_CAP if cap is None else cap
    if space.size > cap:
        raise CapExceeded(f"|S| = {space.size} exceeds the dense-matrix budget {cap}")


def cumulative_utility_matrix(game: Game, cap: int | None = None) -> np.ndarray:
    """Matrix of U(x, y) over all ordered profile pairs."""
    space = game.space
    _check_matrix_cap(space, cap)
    U = game.utility_tables()
    out = np.zeros((space.size, space.size))
    for i in range(space.n):
        out += U[i][space.swap_index(i)]
    return out


def kappa(game: Game, x: Sequence[int], y: Sequence[int]) -> float:
    """K(x, y) = sum_i Phi(x_-i, y_i) - (n - 2) Phi(x)."""
    space = game.space
    x, y = space.validate(x), space.validate(y)
    phi = game.potential_table()
    total = -(space.n - 2) * phi[space.index(x)]
    for i in range(space.n):
        z = list(x)
        z[i] = y[i]
        total += phi[space.index(z)]
    return float(total)


def kappa_matrix(game: Game, cap: int | None = None) -> np.ndarray:
    """Matrix of K(x, y) over all ordered profile pairs."""
    space = game.space
    _check_matrix_cap(space, cap)
    phi = game.potential_table()
    out = np.tile(-(space.n - 2) * phi[:, None], (1, space.size))
    for i in range(space.n):
        out += phi[space.swap_index(i)]
    return out


def kappa_edge(edge: EdgeGame, x: Sequence[int], y: Sequence[int]) -> float:
    """Edge contribution K_e(x, y) = Phi_e(x_u, y_v) + Phi_e(y_u, x_v)."""
    u, v = edge.u, edge.v
    return float(edge.potential[x[u], y[v]] + edge.potential[y[u], x[v]])


def kappa_edge_matrix(edge: EdgeGame, space: StrategySpace) -> np.ndarray:
    X = space.profiles
    phi = edge.potential
    xu, xv = X[:, edge.u], X[:, edge.v]
    return phi[xu[:, None], xv[None, :]] + phi[xu[None, :], xv[:, None]]


def log_all_logit(game: Game, beta: float, form: str = "product", cap: int | None = None) -> np.ndarray:
    """Log of the all-logit kernel computed by the requested route."""
    space = game.space
    _check_matrix_cap(space, cap)
    beta = check_beta(beta)
    if form == "product":
        tables = log_choice_tables(game, beta)
        out = np.zeros((space.size, space.size))
        for i, L in enumerate(tables):
            out += L.reshape(-1)[space.swap_index(i)]
        return out
    _check_exponent(game, beta)
    if form == "utility":
        return log_softmax(beta * cumulative_utility_matrix(game, cap), axis=1)
    if form == "kappa":
        return log_softmax(-beta * kappa_matrix(game, cap), axis=1)
    raise ValueError(f"unknown kernel form {form!r}")


def all_logit_kernel(game: Game, beta: float, form: str = "product",
                     cap: int | None = None) -> TransitionKernel:
    """All players revise simultaneously and independently by logit choice."""
    P = np.exp(log_all_logit(game, beta, form, cap))
    if not np.all(P > 0):
        raise ValueError(f"beta={beta} underflows all-logit transition probabilities to 0")
    P /= P.sum(axis=1, keepdims=True)
    return TransitionKernel(P, float(beta), ALL_LOGIT, game.space)


def one_logit_kernel(game: Game, beta: float, cap: int | None = None) -> TransitionKernel:
    """A uniformly random player revises by logit choice; the others stay put."""
    space = game.space
    _check_matrix_cap(space, cap)
    tables = log_choice_tables(game, beta)
    X = space.profiles
    size, n = space.size, space.n
    P = np.zeros((size, size))
    rows = np.arange(size)
    for i, L in enumerate(tables):
        probs = np.exp(L.reshape(-1))
        for s in range(space.sizes[i]):
            target = rows + (s - X[:, i]) * space.strides[i]
            # entries of profiles already playing s land on the diagonal
            np.add.at(P, (rows, target), probs[target] / n)
    return TransitionKernel(P, float(beta), ONE_LOGIT, space)


# --------------------------------------------------------------------------
# Monte Carlo


def make_rng(seed: int, chain_id: int = 0) -> np.random.Generator:
    """Counter-based generator; distinct chain ids give independent streams."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(chain_id),))
    return np.random.Generator(np.random.Philox(ss))


class _ChoiceSampler:
    """Cumulative logit-choice tables, precomputed per profile for fast stepping."""

    def __init__(self, game: Game, beta: float):
        space = game.space
        self.space = space
        self.strides = [int(s) for s in space.strides]
        tables = log_choice_tables(game, beta)
        X = space.profiles
        rows = np.arange(space.size)
        self.cdf = []
        for i, L in enumerate(tables):
            flat = L.reshape(-1)
            idx = rows[:, None] + (np.arange(space.sizes[i])[None, :] - X[:, [i]]) * space.strides[i]
            c = np.cumsum(np.exp(flat[idx]), axis=1)
            c[:, -1] = 1.0
            self.cdf.append(c.tolist())
        self.current = X.tolist()

    def all_step(self, x: int, draws) -> int:
        nxt = 0
        for cdf, stride, u in zip(self.cdf, self.strides, draws):
            nxt += bisect.bisect_right(cdf[x], u) * stride
        return nxt

    def one_step(self, x: int, pick: float, draw: float) -> int:
        n = len(self.strides)
        i = min(int(pick * n), n - 1)
        s = bisect.bisect_right(self.cdf[i][x], draw)
        return x + (s - self.current[x][i]) * self.strides[i]


class LocalSampler:
    """Logit stepping for local interaction games without enumerating S.

    Utilities are recomputed from the edge payoffs at every step, so the cost
    per step is O(|E| m) regardless of |S|.
    """

    def __init__(self, game, beta: float):
        space = game.space
        self.n = space.n
        self.beta = check_beta(beta)
        m = max(space.sizes)
        self.m = m
        E = len(game.edges)
        self.U = np.array([e.u for e in game.edges], dtype=np.intp)
        self.V = np.array([e.v for e in game.edges], dtype=np.intp)
        pu = np.zeros((E, m, m))
        pv = np.zeros((E, m, m))
        for k, e in enumerate(game.edges):
            a, b = e.shape
            pu[k, :a, :b] = e.payoff_u
            pv[k, :a, :b] = e.payoff_v
        self.invalid = np.arange(m)[None, :] >= np.asarray(space.sizes)[:, None]
        rows = np.arange(E)
        # row e * m + t: edge e's payoff vector for its u endpoint when v plays t;
        # rows offset by E * m: the same for the v endpoint when u plays t
        self.table = np.concatenate([pu.transpose(0, 2, 1).reshape(E * m, m), pv.reshape(E * m, m)])
        self.offsets = np.concatenate([rows * m, (E + rows) * m])
        self.other = np.concatenate([self.V, self.U])
        self.incident = csr_matrix((np.ones(2 * E), (np.concatenate([self.U, self.V]),
                                                     np.arange(2 * E))), shape=(self.n, 2 * E))

    def choice_cdf(self, x: np.ndarray) -> np.ndarray:
        """Per-player cumulative logit-choice probabilities at x, shape (n, m)."""
        util = self.incident @ np.take(self.table, self.offsets + x[self.other], axis=0)
        z = np.where(self.invalid, -np.inf, self.beta * util)
        w = np.exp(z - z.max(axis=1, keepdims=True))
        c = np.cumsum(w, axis=1)
        return c / c[:, -1:]

    def step(self, x: np.ndarray, kind: str, draws: np.ndarray) -> np.ndarray:
        cdf = self.choice_cdf(x)
        if kind == ALL_LOGIT:
            return np.minimum((cdf <= draws[:, None]).sum(axis=1), self.m - 1)
        i = min(int(draws[0] * self.n), self.n - 1)
        y = x.copy()
        y[i] = min(int(np.searchsorted(cdf[i], draws[1], side="right")), self.m - 1)
        return y


def simulate_local(game, x0: Sequence[int], beta: float, kind: str, steps: int,
                   rng: np.random.Generator, block: int = 4096) -> np.ndarray:
    """Trajectory of profiles (steps + 1 rows) for a local interaction game."""
    if kind not in KINDS:
        raise ValueError(f"unknown dynamics kind {kind!r}")
    sampler = LocalSampler(game, beta)
    x = np.asarray(game.space.validate(x0), dtype=np.intp)
    traj = np.empty((steps + 1, game.n), dtype=np.int8 if max(game.space.sizes) < 128 else np.int64)
    traj[0] = x
    width = game.n if kind == ALL_LOGIT else 2
    t = 0
    while t < steps:
        draws = rng.random((min(block, steps - t), width))
        for row in draws:
            x = sampler.step(x, kind, row)
            t += 1
            traj[t] = x
    return traj


def simulate_step(game: Game, x: Sequence[int], beta: float, kind: str,
                  rng: np.random.Generator) -> Profile:
    """One transition of the chosen dynamics from profile x."""
    space = game.space
    x = space.validate(x)
    if kind == ALL_LOGIT:
        return tuple(int(rng.choice(space.sizes[i], p=logit_choice(game, i, x, beta)))
                     for i in range(space.n))
    if kind == ONE_LOGIT:
        i = int(rng.integers(space.n))
        y = list(x)
        y[i] = int(rng.choice(space.sizes[i], p=logit_choice(game, i, x, beta)))
        return tuple(y)
    raise ValueError(f"unknown dynamics kind {kind!r}")


def simulate(game: Game, x0: Sequence[int], beta: float, kind: str, steps: int,
             rng: np.random.Generator, block: int = 65536) -> np.ndarray:
    """Trajectory of flat profile indices of length steps + 1, starting at x0."""
    sampler = _ChoiceSampler(game, beta)
    n = game.n
    traj = np.empty(steps + 1, dtype=np.int64)
    x = game.space.index(x0)
    traj[0] = x
    t = 0
    while t < steps:
        m = min(block, steps - t)
        if kind == ALL_LOGIT:
            draws = rng.random((m, n)).tolist()
            for row in draws:
                x = sampler.all_step(x, row)
                t += 1
                traj[t] = x
        elif kind == ONE_LOGIT:
            draws = rng.random((m, 2)).tolist()
            for pick, d in draws:
                x = sampler.one_step(x, pick, d)
                t += 1
                traj[t] = x
        else:
            raise ValueError(f"unknown dynamics kind {kind!r}")
    return traj


def occupancy(traj: np.ndarray, size: int, burn_in: int = 0) -> np.ndarray:
    """Empirical visit frequencies of a trajectory of flat indices."""
    counts = np.bincount(traj[burn_in:], minlength=size)
    return counts / counts.sum()

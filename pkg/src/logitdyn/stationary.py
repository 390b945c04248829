"""Stationary distributions and partition functions of the logit dynamics.

Three independent routes are available:

* ``gibbs``: one-logit stationary distribution, pi_1(x) ~ exp(-beta Phi(x));
* ``all_logit_stationary_closed_form``: pi_A(x) ~ gamma_A(x) = sum_y exp(-beta K(x, y)),
  valid for local interaction games;
* ``stationary_by_solve``: numeric left eigenvector of any ergodic kernel.

Weights are handled in log domain throughout.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from . import config
from .dynamics import TransitionKernel, check_beta, kappa_matrix
from .errors import ConvergenceError
from .game import Game, LocalInteractionGame, StrategySpace, bipartition_sides


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over the flat profile order."""

    probs: np.ndarray
    log_probs: np.ndarray | None = None
    space: StrategySpace | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0):
            raise ValueError("distribution has negative entries")
        if abs(p.sum() - 1.0) > config.ATOL:
            raise ValueError(f"distribution sums to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self):
        return len(self.probs)

    @classmethod
    def from_log_weights(cls, log_w, space: StrategySpace | None = None) -> "Distribution":
        log_w = np.asarray(log_w, dtype=float)
        log_p = log_w - logsumexp(log_w)
        return cls(np.exp(log_p), log_p, space)

    def logp(self) -> np.ndarray:
        if self.log_probs is not None:
            return self.log_probs
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    def to_csv(self, path) -> None:
        logp = self.logp()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "profile", "probability", "log_probability"])
            for k, p in enumerate(self.probs):
                prof = " ".join(map(str, self.space.profile(k))) if self.space is not None else ""
                writer.writerow([k, prof, f"{p:.17g}", f"{logp[k]:.17g}"])


def log_gamma_1(game: Game, beta: float) -> np.ndarray:
    """Log Boltzmann factors -beta * Phi(x)."""
    return -check_beta(beta) * game.potential_table()


def log_gamma_A(game: Game, beta: float) -> np.ndarray:
    """log gamma_A(x) = log sum_y exp(-beta K(x, y))."""
    return logsumexp(-check_beta(beta) * kappa_matrix(game), axis=1)


def gibbs(game: Game, beta: float) -> Distribution:
    """One-logit stationary distribution of a potential game."""
    game.space.check_cap()
    return Distribution.from_log_weights(log_gamma_1(game, beta), game.space)


def all_logit_stationary_closed_form(game: Game, beta: float) -> Distribution:
    """All-logit stationary distribution of a local interaction game, pi_A ~ gamma_A."""
    return Distribution.from_log_weights(log_gamma_A(game, beta), game.space)


def _residual(pi: np.ndarray, P: np.ndarray) -> float:
    return float(np.abs(pi @ P - pi).sum())


def _solve_linear(P: np.ndarray) -> np.ndarray:
    m = P.shape[0]
    A = P.T - np.eye(m)
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    pi = scipy.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _gth(P: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman state reduction; subtraction-free, so accurate for slow chains."""
    A = np.array(P, dtype=float)
    m = A.shape[0]
    for k in range(m - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0:
            raise ConvergenceError("GTH reduction hit a state with no way back; chain is reducible")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(m)
    pi[0] = 1.0
    for k in range(1, m):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()


def stationary_by_solve(kernel: TransitionKernel | np.ndarray, tol: float = 1e-12,
                        max_iter: int = 10**7, method: str = "power",
                        square_every: int = 64) -> Distribution:
    """Unique stationary distribution of an ergodic kernel.

    ``method="power"`` iterates pi <- pi Q from the uniform vector until
    ||pi P - pi||_1 < tol. Q starts as P and is squared every ``square_every``
    sweeps without convergence, so slowly mixing chains still converge in a
    logarithmic number of squarings; ``max_iter`` bounds the total number of
    row sweeps (a squaring counts as |S| sweeps). On non-convergence the dense
    linear system (P^T - I) pi = 0, sum(pi) = 1 is solved instead; if that
    also misses tol, ConvergenceError is raised. ``method="solve"`` goes
    straight to the linear system; ``method="gth"`` uses GTH state reduction,
    which keeps high relative accuracy when the spectral gap is tiny.
    """
    P = kernel.matrix if isinstance(kernel, TransitionKernel) else np.asarray(kernel, dtype=float)
    space = kernel.space if isinstance(kernel, TransitionKernel) else None
    m = P.shape[0]
    if method not in ("power", "solve", "gth"):
        raise ValueError(f"unknown method {method!r}")
    if method == "gth":
        return Distribution(_gth(P), None, space)
    if method == "power":
        pi = np.full(m, 1.0 / m)
        Q = P
        sweeps, since_square = 0, 0
        while sweeps < max_iter:
            pi = pi @ Q
            pi /= pi.sum()
            sweeps += 1
            since_square += 1
            if _residual(pi, P) < tol:
                return Distribution(pi, None, space)
            if since_square >= square_every:
                Q = Q @ Q
                Q /= Q.sum(axis=1, keepdims=True)
                sweeps += m
                since_square = 0
    pi = _solve_linear(P)
    res = _residual(pi, P)
    if res >= max(tol, 1e3 * np.finfo(float).eps * m):
        raise ConvergenceError(f"stationary solve residual {res:.3g} above tolerance {tol:.3g}")
    return Distribution(pi, None, space)


@dataclass(frozen=True)
class PartitionFunctions:
    log_z1: float
    log_zA: float

    @property
    def z1(self) -> float | None:
        """Linear-domain Z_1, or None when it overflows."""
        return _linear(self.log_z1)

    @property
    def zA(self) -> float | None:
        return _linear(self.log_zA)

    @property
    def overflow(self) -> bool:
        return self.z1 is None or self.zA is None

    @property
    def log_ratio(self) -> float:
        """log(Z_A / Z_1^2)."""
        return self.log_zA - 2.0 * self.log_z1


def _linear(logv: float) -> float | None:
    if logv > np.log(np.finfo(float).max):
        return None
    return float(np.exp(logv))


def partition_functions(game: Game, beta: float) -> PartitionFunctions:
    """Z_1 = sum_x exp(-beta Phi(x)) and Z_A = sum_{x,y} exp(-beta K(x, y))."""
    log_z1 = float(logsumexp(log_gamma_1(game, beta)))
    log_zA = float(logsumexp(log_gamma_A(game, beta)))
    return PartitionFunctions(log_z1, log_zA)


def marginal_on(dist, space: StrategySpace, players) -> np.ndarray:
    """pi(L(x)) for every x: the probability that the coordinates in players match x."""
    players = sorted(players)
    p = np.asarray(dist, dtype=float).reshape(space.shape)
    others = tuple(k for k in range(space.n) if k not in players)
    marg = p.sum(axis=others, keepdims=True)
    return np.broadcast_to(marg, space.shape).reshape(-1)


def bipartite_product_identity(game: LocalInteractionGame, left, beta: float) -> float:
    """Max over profiles of |pi_A(x) - pi_1(L(x)) * pi_1(R(x))| on a bipartite game."""
    left, right = bipartition_sides(game, left)
    pi1 = gibbs(game, beta)
    piA = all_logit_stationary_closed_form(game, beta)
    prod = marginal_on(pi1, game.space, left) * marginal_on(pi1, game.space, right)
    return float(np.max(np.abs(piA.probs - prod)))

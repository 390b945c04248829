"""Curie-Weiss game: coordination with a = b = 1, c = d = -1 on the complete graph.

Every quantity depends on a profile only through its magnetization
Diff(x) = #(+1) - #(-1), so the all-logit chain lumps to a chain on
Diff in {-n, -n+2, ..., n}.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, log_expit, logsumexp

from .dynamics import check_beta
from .errors import CapExceeded, GameSpecError
from .game import EdgeGame, LocalInteractionGame, StrategySpace
from .stationary import Distribution, stationary_by_solve

LUMPED_CAP = 10**4

POLYNOMIAL, EXPONENTIAL, OPEN = "polynomial", "exponential", "open"


def _check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise GameSpecError(f"Curie-Weiss game needs n >= 2 players, got {n}")
    return int(n)


def cw_game(n: int) -> LocalInteractionGame:
    n = _check_n(n)
    edges = [EdgeGame.coordination(u, v, 1.0, 1.0, -1.0, -1.0)
             for u, v in itertools.combinations(range(n), 2)]
    return LocalInteractionGame(StrategySpace((2,) * n), tuple(edges))


def diff_values(n: int) -> np.ndarray:
    """Reachable magnetizations -n, -n+2, ..., n."""
    return np.arange(-n, n + 1, 2)


def cw_potential(n: int, d: int) -> float:
    """Phi = (n - Diff^2) / 2."""
    return (n - d * d) / 2.0


def _check_diff(n: int, d: int) -> None:
    if abs(d) > n or (n - d) % 2:
        raise GameSpecError(f"magnetization {d} is not reachable with {n} players")


def cw_kappa(n: int, diff_x: int, diff_y: int, hamming: int) -> float:
    """K(x, y) = n - Diff(x) Diff(y) - 2 h.

    Feasible Hamming distances run from |dx - dy| / 2 to n - |dx + dy| / 2 in
    steps of 1.
    """
    n = _check_n(n)
    _check_diff(n, diff_x)
    _check_diff(n, diff_y)
    lo, hi = abs(diff_x - diff_y) // 2, n - abs(diff_x + diff_y) // 2
    if not lo <= hamming <= hi:
        raise GameSpecError(
            f"Hamming distance {hamming} impossible between magnetizations {diff_x} and {diff_y} "
            f"(feasible range [{lo}, {hi}])")
    return float(n - diff_x * diff_y - 2 * hamming)


def _log_binom_pmf(k: int, log_p: float, log_q: float) -> np.ndarray:
    j = np.arange(k + 1)
    log_c = gammaln(k + 1) - gammaln(j + 1) - gammaln(k - j + 1)
    with np.errstate(invalid="ignore"):
        out = log_c + np.where(j > 0, j * log_p, 0.0) + np.where(k - j > 0, (k - j) * log_q, 0.0)
    return out


@dataclass(frozen=True, eq=False)
class MagnetizationChain:
    """All-logit dynamics viewed through Diff; row/column k is Diff = -n + 2k."""

    n: int
    beta: float
    log_kernel: np.ndarray

    @property
    def states(self) -> np.ndarray:
        return diff_values(self.n)

    @property
    def kernel(self) -> np.ndarray:
        P = np.exp(self.log_kernel)
        return P / P.sum(axis=1, keepdims=True)

    def stationary(self) -> Distribution:
        return stationary_by_solve(self.kernel, method="gth")


def cw_lumped_kernel(n: int, beta: float, cap: int = LUMPED_CAP) -> MagnetizationChain:
    """Transition law of Diff under the all-logit dynamics.

    With k players on +1 and magnetization D, a +1 player sees D - 1 from the
    others and keeps +1 with probability 1 / (1 + exp(-2 beta (D - 1))); a -1
    player sees D + 1 and moves to +1 with probability 1 / (1 + exp(-2 beta (D + 1))).
    The next count of +1 players is the sum of the two binomials.
    """
    n = _check_n(n)
    if n > cap:
        raise CapExceeded(f"lumped Curie-Weiss chain with n = {n} exceeds budget {cap}")
    beta = check_beta(beta)
    L = np.full((n + 1, n + 1), -np.inf)
    for k in range(n + 1):
        d = 2 * k - n
        stay = _log_binom_pmf(k, log_expit(2 * beta * (d - 1)), log_expit(-2 * beta * (d - 1)))
        join = _log_binom_pmf(n - k, log_expit(2 * beta * (d + 1)), log_expit(-2 * beta * (d + 1)))
        M = stay[:, None] + join[None, :]
        top = M.max()
        w = np.bincount((np.arange(k + 1)[:, None] + np.arange(n - k + 1)[None, :]).ravel(),
                        weights=np.exp(M - top).ravel(), minlength=n + 1)
        with np.errstate(divide="ignore"):
            row = np.log(w) + top
        L[k] = row - logsumexp(row)
    return MagnetizationChain(n, beta, L)


def diff_pushforward(dist, n: int) -> np.ndarray:
    """Law of Diff under a distribution on the full profile space."""
    space = StrategySpace((2,) * n)
    plus = space.profiles.sum(axis=1)
    return np.bincount(plus, weights=np.asarray(dist, dtype=float), minlength=n + 1)


def log_q(n: int, beta: float) -> float:
    """log of 1 / (1 + exp(2 beta (n - 1))), the chance of leaving a consensus per player."""
    return float(log_expit(-2 * check_beta(beta) * (n - 1)))


def cw_alpha_y_bound(n: int, beta: float, diff_y: int) -> float:
    """Log of q^((n+|D|)/2) (1-q)^((n-|D|)/2), a lower bound on min_x P(x, y)."""
    n = _check_n(n)
    _check_diff(n, diff_y)
    lq = log_q(n, beta)
    l1q = float(log_expit(2 * beta * (n - 1)))
    a = abs(diff_y)
    return (n + a) / 2 * lq + (n - a) / 2 * l1q


def cw_log_alpha_sum(n: int, beta: float) -> float:
    """Log of the sum over all y of the per-column bound."""
    terms = [gammaln(n + 1) - gammaln((n + d) // 2 + 1) - gammaln((n - d) // 2 + 1)
             + cw_alpha_y_bound(n, beta, int(d)) for d in diff_values(n)]
    return float(logsumexp(terms))


@dataclass(frozen=True)
class CwBounds:
    """Explicit step counts, all stored as natural logs."""

    n: int
    beta: float
    log_upper_general: float
    log_upper_highbeta: float
    highbeta_applicable: bool
    log_upper_column_sum: float
    log_lower: float
    regime: str

    def to_dict(self) -> dict:
        return {"n": self.n, "beta": self.beta,
                "log_upper_general": self.log_upper_general,
                "log_upper_highbeta": self.log_upper_highbeta,
                "highbeta_applicable": self.highbeta_applicable,
                "log_upper_column_sum": self.log_upper_column_sum,
                "log_lower": self.log_lower,
                "regime": self.regime}


def cw_regime(n: int, beta: float) -> str:
    if beta * n * n <= 2 * math.log(n):
        return POLYNOMIAL
    if beta * n > math.log(4):
        return EXPONENTIAL
    return OPEN


def cw_bounds(n: int, beta: float) -> CwBounds:
    """Upper and lower bounds on the all-logit t_mix(1/4) of the Curie-Weiss game.

    With E = n(n-1) for even n and n^2 - 1 for odd n, and alpha the Doeblin
    constant of the kernel:

    * general:   alpha >= exp(-beta E) / (n+1), so t_mix <= ln 4 (n+1) exp(beta E);
    * high beta: when (1 + exp(-2 beta (n-1)))^2 <= 1 + 1/n, alpha gains a factor
      2^n / sqrt(e), so t_mix <= ln 4 (n+1) exp(1/2 + beta E) / 2^n;
    * column sum: the Doeblin bound with alpha replaced by the full per-column sum;
    * lower:     exp(beta n (n-2)) / 4^(n+1), below the bottleneck bound at Diff < 0.
    """
    n = _check_n(n)
    beta = check_beta(beta)
    E = n * (n - 1) if n % 2 == 0 else n * n - 1
    ln_ln4 = math.log(math.log(4))
    log_general = ln_ln4 + math.log(n + 1) + beta * E
    log_high = log_general + 0.5 - n * math.log(2)
    slack = 2 * math.log1p(math.exp(-2 * beta * (n - 1)))
    high_ok = slack <= math.log1p(1 / n)
    log_alpha = cw_log_alpha_sum(n, beta)
    if log_alpha >= 0:
        log_column_sum = 0.0
    else:
        rate = -math.log1p(-math.exp(log_alpha))
        log_column_sum = math.log(max(1.0, math.ceil(math.log(4) / rate))) if rate > 0 \
            else ln_ln4 - log_alpha
    log_lower = beta * n * (n - 2) - (n + 1) * math.log(4)
    return CwBounds(n, beta, log_general, log_high, high_ok, log_column_sum, log_lower,
                    cw_regime(n, beta))

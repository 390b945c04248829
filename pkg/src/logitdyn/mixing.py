"""Exact mixing times and analytic mixing-time bounds.

Every asymptotic bound is turned into an explicit number of steps:

* Doeblin minorization: if every column minimum alpha_y = min_x P(x, y) sums to
  alpha > 0 then d(t) <= (1 - alpha)^t, so t_mix(eps) <= ceil(ln(1/eps) / -ln(1 - alpha)).
* general bound: alpha >= exp(-beta * dU) with dU the range of the cumulative utility.
* dominant profile: the coupling that sends both chains to the dominant profile
  succeeds with probability >= m^-n per step, giving ceil(ln(1/eps) / -ln(1 - m^-n)).
* bottleneck: t_mix(1/4) >= 1 / (4 B(S)) for any S with pi(S) <= 1/2.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import config
from .dynamics import TransitionKernel, all_logit_kernel, check_beta, cumulative_utility_matrix
from .errors import CapExceeded, InconsistencyError
from .game import Game, Profile
from .stationary import stationary_by_solve

UPPER, LOWER = "upper", "lower"
_MONOTONE_SLACK = 1e-10


def _matrix(kernel) -> np.ndarray:
    return kernel.matrix if isinstance(kernel, TransitionKernel) else np.asarray(kernel, dtype=float)


def total_variation(d1, d2) -> float:
    a, b = np.asarray(d1, dtype=float), np.asarray(d2, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"distributions have different lengths {a.size} and {b.size}")
    return float(0.5 * np.abs(a - b).sum())


def worst_case_tv(Pt: np.ndarray, pi) -> float:
    """max_x ||Pt(x, .) - pi||_TV."""
    return float(0.5 * np.abs(Pt - np.asarray(pi, dtype=float)[None, :]).sum(axis=1).max())


class Bound(NamedTuple):
    name: str
    value: float
    kind: str


@dataclass
class MixingResult:
    t_mix_exact: int | None
    epsilon: float
    tv_curve: list[tuple[int, float]]
    t_cap: int
    bounds: list[Bound] = field(default_factory=list)

    @property
    def computed(self) -> bool:
        return self.t_mix_exact is not None

    @property
    def lower_bound(self) -> int:
        """Certified lower bound: t_mix itself, or t_cap + 1 when the cap was hit."""
        return self.t_mix_exact if self.computed else self.t_cap + 1

    def to_dict(self) -> dict:
        return {
            "t_mix_exact": self.t_mix_exact,
            "t_mix_exceeds": None if self.computed else self.t_cap,
            "epsilon": self.epsilon,
            "tv_curve": [[int(t), float(v)] for t, v in self.tv_curve],
            "bounds": [{"name": b.name, "value": _json_float(b.value), "kind": b.kind}
                       for b in self.bounds],
        }

    def tv_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "worst_tv"])
            for t, v in self.tv_curve:
                writer.writerow([t, f"{v:.17g}"])


def _json_float(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _renorm(Q: np.ndarray) -> np.ndarray:
    return Q / Q.sum(axis=1, keepdims=True)


def exact_mixing_time(kernel, pi, epsilon: float = 0.25, t_cap: int = 10**12,
                      step_limit: int = 512, cap: int | None = None) -> MixingResult:
    """First t with max_x ||P^t(x, .) - pi||_TV <= epsilon.

    The first ``step_limit`` matrix powers are formed one step at a time and
    all recorded. Past that, powers P^(2^k) are built by squaring and the
    crossing is located by binary lifting, which relies on the worst-case
    distance being nonincreasing in t; only the powers actually evaluated
    appear in ``tv_curve``. If no crossing happens by ``t_cap`` the result
    has ``t_mix_exact=None``, certifying t_mix > t_cap.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if t_cap < 1 or step_limit < 1:
        raise ValueError("t_cap and step_limit must be positive")
    P = _matrix(kernel)
    m = P.shape[0]
    cap = config.MIXING_CAP if cap is None else cap
    if m > cap:
        raise CapExceeded(f"|S| = {m} exceeds the exact-mixing budget {cap}")
    pi = np.asarray(pi, dtype=float)
    curve: list[tuple[int, float]] = []

    def record(t: int, Q: np.ndarray) -> float:
        d = worst_case_tv(Q, pi)
        curve.append((t, d))
        return d

    def finish(t):
        curve.sort()
        for (t0, d0), (t1, d1) in zip(curve, curve[1:]):
            if d1 > d0 + _MONOTONE_SLACK:
                raise InconsistencyError(
                    f"worst-case TV increased from {d0!r} at t={t0} to {d1!r} at t={t1}")
        return MixingResult(t, epsilon, curve, t_cap)

    Pt = P
    for t in range(1, min(step_limit, t_cap) + 1):
        if record(t, Pt) <= epsilon:
            return finish(t)
        Pt = _renorm(Pt @ P)
    if step_limit >= t_cap:
        return finish(None)

    powers = [P]
    hi = None
    while (1 << (len(powers) - 1)) < t_cap:
        powers.append(_renorm(powers[-1] @ powers[-1]))
        t = 1 << (len(powers) - 1)
        if t > step_limit and record(t, powers[-1]) <= epsilon:
            hi = t
            break
    if hi is None or hi > t_cap:
        Q = _compose(powers, t_cap)
        if record(t_cap, Q) > epsilon:
            return finish(None)
        hi = t_cap
    # largest t already known to be above epsilon
    lo = max(step_limit, 1 << (len(powers) - 2))
    A = _compose(powers, lo)
    for j in range(len(powers) - 1, -1, -1):
        if lo + (1 << j) < hi:
            B = _renorm(A @ powers[j])
            if record(lo + (1 << j), B) > epsilon:
                A, lo = B, lo + (1 << j)
    return finish(lo + 1)


def _compose(powers: list[np.ndarray], t: int) -> np.ndarray:
    """P^t from the stored P^(2^j)."""
    out = None
    j = 0
    while t:
        if t & 1:
            out = powers[j] if out is None else _renorm(out @ powers[j])
        t >>= 1
        j += 1
    return out


# --------------------------------------------------------------------------
# analytic bounds


def _doeblin_steps(log_alpha: float, epsilon: float) -> float:
    """ceil(ln(1/eps) / -ln(1 - alpha)); inf when alpha = 0 or the count overflows."""
    if log_alpha == -math.inf:
        return math.inf
    if log_alpha >= 0.0:
        return 1.0
    alpha = math.exp(log_alpha)
    rate = -math.log1p(-alpha)
    # -ln(1 - alpha) >= alpha, so ln(1/eps) / alpha is a valid fallback when alpha underflows
    steps = math.log(1 / epsilon) / rate if rate > 0 else math.log(1 / epsilon) * math.exp(-log_alpha)
    if not math.isfinite(steps):
        return math.inf
    return float(max(1, math.ceil(steps)))


class DoeblinBound(NamedTuple):
    alpha: float
    column_minima: np.ndarray
    t_bound: float


def alpha_lower_bound_tmix(kernel, epsilon: float = 0.25) -> DoeblinBound | None:
    """Upper bound on t_mix from the column minima of the kernel; None when alpha = 0."""
    P = _matrix(kernel)
    col = P.min(axis=0)
    alpha = float(min(1.0, col.sum()))
    if alpha <= 0.0:
        return None
    return DoeblinBound(alpha, col, _doeblin_steps(math.log(alpha), epsilon))


class GeneralBound(NamedTuple):
    delta_u: float
    log_scale: float
    t_bound: float


def cumulative_utility_range(game: Game, cap: int | None = None) -> float:
    U = cumulative_utility_matrix(game, cap)
    return float(U.max() - U.min())


def general_upper_bound(game: Game, beta: float, epsilon: float = 0.25,
                        cap: int | None = None) -> GeneralBound:
    """(dU, beta * dU, explicit steps) with alpha >= exp(-beta dU)."""
    beta = check_beta(beta)
    du = cumulative_utility_range(game, cap)
    log_scale = beta * du
    return GeneralBound(du, log_scale, _doeblin_steps(-log_scale, epsilon))


def graphical_coordination_delta_u(a: float, b: float, c: float, d: float, num_edges: int) -> float:
    """Bound on dU for a coordination game played on every edge: 2(max(a,b) - min(c,d))|E|."""
    return 2.0 * (max(a, b) - min(c, d)) * num_edges


class DominantProfile(NamedTuple):
    profile: Profile | None
    m: int
    bound: int | None
    t_bound: float | None


def find_dominant_profile(game: Game, atol: float = config.ATOL) -> Profile | None:
    """A profile made of weakly dominant strategies, or None."""
    space = game.space
    U = game.utility_tables()
    choice = []
    for i in range(space.n):
        ui = U[i].reshape(space.shape)
        best = ui.max(axis=i, keepdims=True)
        ok = np.all(ui >= best - atol, axis=tuple(k for k in range(space.n) if k != i))
        cands = np.flatnonzero(ok)
        if cands.size == 0:
            return None
        choice.append(int(cands[0]))
    return tuple(choice)


def dominant_profile_bound(game: Game, epsilon: float = 0.25) -> DominantProfile:
    m = max(game.space.sizes)
    prof = find_dominant_profile(game)
    if prof is None:
        return DominantProfile(None, m, None, None)
    n = game.n
    bound = m ** n
    return DominantProfile(prof, m, bound, _doeblin_steps(-n * math.log(m), epsilon))


@dataclass(frozen=True)
class BottleneckSet:
    states: tuple[int, ...]
    ratio: float
    mass: float

    @property
    def lower_bound(self) -> float:
        """1 / (4 B(S)), a lower bound on t_mix(1/4)."""
        return self.lower_bound_at(0.25)

    def lower_bound_at(self, epsilon: float) -> float:
        """(1 - 2 eps) / (2 B(S)), a lower bound on t_mix(eps)."""
        if not 0 < epsilon < 0.5:
            return 0.0
        return math.inf if self.ratio == 0 else (1 - 2 * epsilon) / (2.0 * self.ratio)


def bottleneck_ratio(kernel, pi, states: Sequence[int]) -> BottleneckSet:
    """B(S) = Q(S, S^c) / pi(S) with Q(x, y) = pi(x) P(x, y)."""
    P = _matrix(kernel)
    pi = np.asarray(pi, dtype=float)
    inside = np.zeros(P.shape[0], dtype=bool)
    inside[list(states)] = True
    mass = float(pi[inside].sum())
    if mass <= 0:
        raise ValueError("bottleneck set has zero stationary mass")
    if mass > 0.5 + config.ATOL:
        raise ValueError(f"bottleneck set has stationary mass {mass:.6g} > 1/2")
    flow = float((pi[inside, None] * P[np.ix_(inside, ~inside)]).sum())
    return BottleneckSet(tuple(int(s) for s in np.flatnonzero(inside)), flow / mass, mass)


def bottleneck_lower_bound(kernel, pi, states: Sequence[int]) -> float:
    """1 / (4 B(S)), which is valid for epsilon = 1/4; inf when nothing leaves S."""
    return bottleneck_ratio(kernel, pi, states).lower_bound


def bottleneck_candidates(game: Game, pi: np.ndarray) -> dict[str, list[int]]:
    """Sets with pi(S) <= 1/2: negative / positive magnetization on binary games, the mode and its complement."""
    cands = {}
    if game.space.is_binary:
        d = (2 * game.space.profiles - 1).sum(axis=1)
        cands["diff_negative"] = np.flatnonzero(d < 0).tolist()
        cands["diff_positive"] = np.flatnonzero(d > 0).tolist()
    top = int(np.argmax(pi))
    cands["complement_of_mode"] = [k for k in range(len(pi)) if k != top]
    cands["mode"] = [top]
    return {k: v for k, v in cands.items() if v and pi[v].sum() <= 0.5 + config.ATOL}


def mixing_analysis(game: Game, beta: float, epsilon: float = 0.25, t_cap: int = 10**12,
                    cap: int | None = None):
    """Exact all-logit t_mix with every applicable analytic bound attached."""
    kernel = all_logit_kernel(game, beta, cap=cap)
    pi = stationary_by_solve(kernel, method="gth").probs
    res = exact_mixing_time(kernel, pi, epsilon, t_cap, cap=cap)
    gen = general_upper_bound(game, beta, epsilon, cap)
    res.bounds.append(Bound("general", gen.t_bound, UPPER))
    db = alpha_lower_bound_tmix(kernel, epsilon)
    if db is not None:
        res.bounds.append(Bound("doeblin", db.t_bound, UPPER))
    dom = dominant_profile_bound(game, epsilon)
    if dom.profile is not None:
        res.bounds.append(Bound("dominant_profile", dom.t_bound, UPPER))
    for name, states in bottleneck_candidates(game, pi).items():
        res.bounds.append(Bound(f"bottleneck_{name}",
                                bottleneck_ratio(kernel, pi, states).lower_bound_at(epsilon), LOWER))
    extra = {"delta_u": gen.delta_u, "log_general_scale": gen.log_scale,
             "alpha": None if db is None else db.alpha,
             "dominant_profile": dom.profile, "dominant_m_pow_n": dom.bound}
    return res, extra


def bound_violations(result: MixingResult) -> list[Bound]:
    """Bounds contradicted by the exact mixing time (or by t_mix > t_cap)."""
    bad = []
    for b in result.bounds:
        if b.kind == UPPER:
            if result.computed and b.value < result.t_mix_exact:
                bad.append(b)
            elif not result.computed and b.value <= result.t_cap:
                bad.append(b)
        elif b.kind == LOWER and result.computed and b.value > result.t_mix_exact:
            bad.append(b)
    return bad

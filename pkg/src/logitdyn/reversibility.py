"""Reversibility tests for logit kernels and the certificate combining them.

All violations of the beta-dependent checks (detailed balance, Kolmogorov
cycles) are measured in log domain; ``certify`` divides them by beta before
applying the tolerance ladder, so classifications do not drift with beta.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import config
from .dynamics import (TransitionKernel, all_logit_kernel, check_beta,
                       cumulative_utility_matrix, kappa_matrix)
from .errors import InconsistencyError
from .game import Game, check_exact_potential, decompose_potential
from .stationary import stationary_by_solve


def _log_kernel(kernel: TransitionKernel | np.ndarray) -> np.ndarray:
    P = kernel.matrix if isinstance(kernel, TransitionKernel) else np.asarray(kernel, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(P)


class DetailedBalance(NamedTuple):
    max_violation: float
    worst_pair: tuple[int, int]
    max_log_violation: float
    worst_log_pair: tuple[int, int]


def check_detailed_balance(kernel: TransitionKernel | np.ndarray, pi) -> DetailedBalance:
    """Worst violation of pi(x) P(x, y) = pi(y) P(y, x), linear and log domain.

    In log domain a pair where exactly one direction has zero flow counts as
    an infinite violation; pairs with zero flow both ways are ignored.
    """
    P = kernel.matrix if isinstance(kernel, TransitionKernel) else np.asarray(kernel, dtype=float)
    pi = np.asarray(pi, dtype=float)
    flux = pi[:, None] * P
    diff = np.abs(flux - flux.T)
    k = int(np.argmax(diff))
    with np.errstate(divide="ignore", invalid="ignore"):
        lf = np.log(flux)
        ldiff = np.abs(lf - lf.T)
    both_zero = (flux == 0) & (flux.T == 0)
    ldiff[both_zero] = 0.0
    ldiff[np.isnan(ldiff)] = np.inf
    kl = int(np.argmax(ldiff))
    m = P.shape[0]
    return DetailedBalance(float(diff.flat[k]), divmod(k, m), float(ldiff.flat[kl]), divmod(kl, m))


def path_log_ratio(kernel: TransitionKernel | np.ndarray, path: Sequence[int]) -> float:
    """log(P[path] / P[path^-1])."""
    LP = _log_kernel(kernel)
    path = np.asarray(path)
    fwd = LP[path[:-1], path[1:]].sum()
    bwd = LP[path[1:], path[:-1]].sum()
    return float(fwd - bwd)


class CycleCheck(NamedTuple):
    max_log_ratio: float
    witness: list[int] | None


def kolmogorov_check(kernel: TransitionKernel | np.ndarray, max_cycle_len: int = 3,
                     sample_budget: int = 10000, rng: np.random.Generator | None = None) -> CycleCheck:
    """Worst |log P[C] - log P[C^-1]| over cycles C.

    Cycles of length 2 and 3 are enumerated exhaustively; longer cycles up to
    ``max_cycle_len`` are sampled, ``sample_budget`` per length. Cycles are
    restricted to the support graph: a transition whose reverse has zero
    probability is reported as an infinite violation on a 2-cycle.
    """
    LP = _log_kernel(kernel)
    m = LP.shape[0]
    fin = np.isfinite(LP)
    asym = fin != fin.T
    if np.any(asym):
        x, y = map(int, np.argwhere(asym)[0])
        return CycleCheck(np.inf, [x, y, x])
    A = np.where(fin, LP - LP.T, 0.0)  # antisymmetric log-ratio per edge
    worst, witness = 0.0, None
    for x in range(m):
        # cycle x -> y -> z -> x for all y, z
        r = A[x][:, None] + A + A[:, x][None, :]
        valid = fin[x][:, None] & fin & fin[:, x][None, :]
        r = np.where(valid, np.abs(r), 0.0)
        k = int(np.argmax(r))
        if r.flat[k] > worst:
            worst = float(r.flat[k])
            y, z = divmod(k, m)
            witness = [x, y, z, x]
    if max_cycle_len > 3:
        rng = np.random.default_rng(0) if rng is None else rng
        for length in range(4, max_cycle_len + 1):
            states = rng.integers(m, size=(sample_budget, length))
            cyc = np.concatenate([states, states[:, :1]], axis=1)
            ok = fin[cyc[:, :-1], cyc[:, 1:]].all(axis=1)
            vals = np.abs(A[cyc[:, :-1], cyc[:, 1:]].sum(axis=1))
            vals[~ok] = 0.0
            k = int(np.argmax(vals))
            if vals[k] > worst:
                worst = float(vals[k])
                witness = [int(s) for s in cyc[k]]
    return CycleCheck(worst, witness)


class TripleCheck(NamedTuple):
    max_violation: float
    witness: tuple[int, int, int] | None


def check_cumulative_utility_condition(game: Game, max_triples: int = 2**24,
                                       rng: np.random.Generator | None = None) -> TripleCheck:
    """Worst violation of U(x,y) - U(y,x) = U(x,z) + U(z,y) - U(y,z) - U(z,x).

    Exhaustive over all triples when |S|^3 <= max_triples, sampled otherwise.
    """
    D = cumulative_utility_matrix(game)
    D = D - D.T
    m = D.shape[0]
    worst, witness = 0.0, None
    if m ** 3 <= max_triples:
        for x in range(m):
            # rows y, cols z
            v = np.abs(D[x][:, None] - D[x][None, :] - D.T)
            k = int(np.argmax(v))
            if v.flat[k] > worst:
                worst = float(v.flat[k])
                y, z = divmod(k, m)
                witness = (x, y, z)
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        t = rng.integers(m, size=(max_triples, 3))
        x, y, z = t.T
        v = np.abs(D[x, y] - D[x, z] - D[z, y])
        k = int(np.argmax(v))
        worst, witness = float(v[k]), tuple(int(s) for s in t[k])
    return TripleCheck(worst, witness)


class PairCheck(NamedTuple):
    max_violation: float
    worst_pair: tuple[int, int]


def check_k_symmetry(game: Game) -> PairCheck:
    """Worst |K(x, y) - K(y, x)| over ordered profile pairs."""
    K = kappa_matrix(game)
    d = np.abs(K - K.T)
    k = int(np.argmax(d))
    return PairCheck(float(d.flat[k]), divmod(k, K.shape[0]))


# --------------------------------------------------------------------------
# certificate

PASS, FAIL, NA = "pass", "fail", "n/a"


def grade(value: float, name: str, passed: float = config.REV_PASS,
          failed: float = config.REV_FAIL) -> str:
    if value < passed:
        return PASS
    if value > failed:
        return FAIL
    raise InconsistencyError(
        f"{name} = {value:.3g} falls between the pass ({passed:g}) and fail ({failed:g}) "
        "thresholds; refusing to classify")


@dataclass
class ReversibilityReport:
    beta: float
    exact_potential: bool
    exactness_witness: list | None
    detailed_balance_max_violation: float
    detailed_balance_max_log_violation: float
    detailed_balance_worst_pair: tuple[int, int]
    kolmogorov_worst_log_ratio: float
    kolmogorov_worst_cycle: list[int] | None
    cumulative_utility_max_violation: float
    cumulative_utility_witness: tuple[int, int, int] | None
    k_symmetry_max_violation: float | None
    k_symmetry_worst_pair: tuple[int, int] | None
    decomposition_residual: float | None
    checks: dict = field(default_factory=dict)
    verdict: str = ""

    @property
    def reversible(self) -> bool:
        return self.verdict == "reversible"

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
            elif isinstance(value, float) and not np.isfinite(value):
                d[key] = "inf" if value > 0 else "-inf"
        return d


def certify(game: Game, beta: float = 1.0, max_cycle_len: int = 3, sample_budget: int = 1000,
            rng: np.random.Generator | None = None) -> ReversibilityReport:
    """Run every reversibility test on the all-logit dynamics of ``game``.

    The verdict is "reversible" iff every applicable check passes. The
    structural test (decomposition residual identically zero) must agree; any
    disagreement, or any value inside the ambiguous band of the tolerance
    ladder, raises InconsistencyError rather than returning a verdict.
    """
    beta = check_beta(beta)
    if beta == 0:
        raise ValueError("certify needs beta > 0: at beta = 0 every all-logit kernel is uniform")
    space = game.space
    U = game.utility_tables()
    exact = check_exact_potential(space, U)

    kernel = all_logit_kernel(game, beta)
    method = "solve" if kernel.size <= 512 else "power"
    pi = stationary_by_solve(kernel, method=method)
    db = check_detailed_balance(kernel, pi)
    cyc = kolmogorov_check(kernel, max_cycle_len, sample_budget, rng)
    ucond = check_cumulative_utility_condition(game)

    checks = {
        "detailed_balance": grade(db.max_log_violation / beta, "detailed balance"),
        "kolmogorov": grade(cyc.max_log_ratio / beta, "Kolmogorov cycle ratio"),
        "cumulative_utility": grade(ucond.max_violation, "cumulative-utility condition"),
        "exact_potential": PASS if exact.is_exact else FAIL,
    }
    ksym = residual = None
    ksym_pair = None
    if exact.is_exact:
        ks = check_k_symmetry(game)
        ksym, ksym_pair = ks.max_violation, ks.worst_pair
        checks["k_symmetry"] = grade(ksym, "K asymmetry")
        res = decompose_potential(space, game.potential_table()).residual
        residual = float(np.max(np.abs(res)))
        checks["structural"] = grade(residual, "decomposition residual") if space.n >= 2 else NA
    else:
        checks["k_symmetry"] = NA
        checks["structural"] = NA

    outcomes = {v for v in checks.values() if v != NA}
    if outcomes == {PASS}:
        verdict = "reversible"
    elif outcomes == {FAIL} or (outcomes == {PASS, FAIL} and _consistent_failure(checks)):
        verdict = "irreversible"
    else:
        raise InconsistencyError(f"reversibility checks disagree: {checks}")

    return ReversibilityReport(
        beta=beta,
        exact_potential=exact.is_exact,
        exactness_witness=exact.witness,
        detailed_balance_max_violation=db.max_violation,
        detailed_balance_max_log_violation=db.max_log_violation,
        detailed_balance_worst_pair=db.worst_log_pair,
        kolmogorov_worst_log_ratio=cyc.max_log_ratio,
        kolmogorov_worst_cycle=cyc.witness,
        cumulative_utility_max_violation=ucond.max_violation,
        cumulative_utility_witness=ucond.witness,
        k_symmetry_max_violation=ksym,
        k_symmetry_worst_pair=ksym_pair,
        decomposition_residual=residual,
        checks=checks,
        verdict=verdict,
    )


def _consistent_failure(checks: dict) -> bool:
    # a potential game may pass exactness while failing every reversibility test
    failing = {k for k, v in checks.items() if v == FAIL}
    passing = {k for k, v in checks.items() if v == PASS}
    return passing == {"exact_potential"} and failing >= {"detailed_balance", "kolmogorov",
                                                         "cumulative_utility"}

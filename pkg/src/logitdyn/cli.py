"""Command-line driver for the exact logit-dynamics analyses.

Exit codes: 0 success, 2 input error, 3 cap exceeded, 4 internal consistency failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, config
from .curie_weiss import cw_bounds, cw_game, cw_lumped_kernel, diff_pushforward
from .dynamics import (ALL_LOGIT, KINDS, all_logit_kernel, make_rng, one_logit_kernel, simulate,
                       simulate_local)
from .errors import CapExceeded, ConvergenceError, GameSpecError, InconsistencyError
from .game import (Game, LocalInteractionGame, check_exact_potential, decompose_potential,
                   load_game, load_potential_game)
from .mixing import bound_violations, exact_mixing_time, mixing_analysis, total_variation
from .observables import Observable, invariance_gap
from .reversibility import certify
from .stationary import (all_logit_stationary_closed_form, gibbs, partition_functions,
                         stationary_by_solve)

EXIT_OK, EXIT_INPUT, EXIT_CAP, EXIT_INCONSISTENT = 0, 2, 3, 4
SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class RunConfig:
    command: str
    game_path: str | None
    potential_path: str | None
    betas: tuple[float, ...]
    epsilon: float
    cap_states: int
    cap_matrix: int
    t_cap: int
    seed: int | None
    out: str | None
    fmt: str
    steps: int
    kind: str
    start: tuple[int, ...] | None
    observable: str | None
    ns: tuple[int, ...]

    def __post_init__(self):
        if any(not math.isfinite(b) or b < 0 for b in self.betas):
            raise GameSpecError(f"--beta values must be finite and >= 0, got {list(self.betas)}")
        if not 0 < self.epsilon < 1:
            raise GameSpecError(f"--epsilon must lie in (0, 1), got {self.epsilon}")
        for name in ("cap_states", "cap_matrix", "t_cap"):
            if getattr(self, name) < 1:
                raise GameSpecError(f"--{name.replace('_', '-')} must be positive")
        if self.steps < 0:
            raise GameSpecError("--steps must be nonnegative")


# --------------------------------------------------------------------------
# output helpers


def _plain(obj):
    """Convert to JSON-ready builtins; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    return str(v)


def _envelope(cfg: RunConfig, results, **extra) -> dict:
    doc = {
        "schema": f"logitdyn/{cfg.command}/v{SCHEMA_VERSION}",
        "command": cfg.command,
        "version": __version__,
        "input": {
            "game": cfg.game_path,
            "potential_table": cfg.potential_path,
            "betas": list(cfg.betas),
            "epsilon": cfg.epsilon,
        },
        "results": results,
    }
    doc.update(extra)
    return _plain(doc)


def _emit(cfg: RunConfig, doc: dict, rows: list[list] | None, header: list[str] | None) -> None:
    if cfg.fmt == "csv":
        if rows is None:
            raise GameSpecError(f"command '{cfg.command}' has no CSV output; use --format json")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow([_fmt(v) for v in r])
        text = buf.getvalue()
    else:
        text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(cfg: RunConfig) -> Game:
    if bool(cfg.game_path) == bool(cfg.potential_path):
        raise GameSpecError("give exactly one of --game or --potential-table")
    game = load_game(cfg.game_path) if cfg.game_path else load_potential_game(cfg.potential_path)
    return game


def _enumerable(cfg: RunConfig, game: Game) -> None:
    game.space.check_cap(cfg.cap_states)
    if game.space.size > cfg.cap_matrix:
        raise CapExceeded(
            f"|S| = {game.space.size} exceeds the dense-matrix budget {cfg.cap_matrix} (--cap-matrix)")


# --------------------------------------------------------------------------
# commands


def cmd_analyze(cfg: RunConfig):
    game = _load(cfg)
    _enumerable(cfg, game)
    exact = check_exact_potential(game.space, game.utility_tables())
    residual = None
    if exact.is_exact:
        res = decompose_potential(game.space, game.potential_table()).residual
        residual = float(np.max(np.abs(res)))
    results, rows = [], []
    for beta in cfg.betas:
        if beta == 0:
            raise GameSpecError("analyze needs beta > 0 (every all-logit kernel is uniform at beta = 0)")
        rep = certify(game, beta)
        results.append(rep.to_dict())
        rows.append([beta, rep.verdict, rep.exact_potential, residual,
                     rep.detailed_balance_max_log_violation, rep.kolmogorov_worst_log_ratio,
                     " ".join(map(str, rep.kolmogorov_worst_cycle or []))])
    doc = _envelope(cfg, results, exact_potential=exact.is_exact,
                    exactness_witness=exact.witness, decomposition_residual=residual,
                    local_interaction=isinstance(game, LocalInteractionGame))
    return doc, rows, ["beta", "verdict", "exact_potential", "decomposition_residual",
                       "detailed_balance_log_violation", "kolmogorov_log_ratio", "kolmogorov_cycle"]


def cmd_stationary(cfg: RunConfig):
    game = _load(cfg)
    _enumerable(cfg, game)
    results, rows = [], []
    for beta in cfg.betas:
        pi1 = gibbs(game, beta)
        kernel = all_logit_kernel(game, beta, cap=cfg.cap_matrix)
        piA_num = stationary_by_solve(kernel)
        one = one_logit_kernel(game, beta, cap=cfg.cap_matrix)
        entry = {
            "beta": beta,
            "pi_1": pi1.probs,
            "pi_A": piA_num.probs,
            "one_logit_residual": float(np.abs(pi1.probs @ one.matrix - pi1.probs).sum()),
            "all_logit_solve_residual": float(np.abs(piA_num.probs @ kernel.matrix - piA_num.probs).sum()),
        }
        pf = partition_functions(game, beta)
        entry.update(log_z1=pf.log_z1, log_zA=pf.log_zA, z1=pf.z1, zA=pf.zA,
                     log_zA_over_z1_squared=pf.log_ratio)
        if isinstance(game, LocalInteractionGame):
            closed = all_logit_stationary_closed_form(game, beta)
            entry["pi_A_closed_form"] = closed.probs
            entry["closed_form_vs_solve_tv"] = total_variation(closed, piA_num)
        else:
            entry["pi_A_closed_form"] = None
            entry["closed_form_vs_solve_tv"] = None
        results.append(entry)
        for k in range(game.space.size):
            rows.append([beta, k, " ".join(map(str, game.space.profile(k))),
                         float(pi1.probs[k]), float(piA_num.probs[k])])
    return _envelope(cfg, results), rows, ["beta", "index", "profile", "pi_1", "pi_A"]


def slope_fit(betas, t_values) -> float | None:
    """Least-squares slope of log t_mix against beta."""
    pts = [(b, math.log(t)) for b, t in zip(betas, t_values) if t is not None]
    if len(pts) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def cmd_mixing(cfg: RunConfig):
    game = _load(cfg)
    _enumerable(cfg, game)
    cap = min(cfg.cap_matrix, config.MIXING_CAP)
    results, rows, tvals = [], [], []
    for beta in cfg.betas:
        res, extra = mixing_analysis(game, beta, cfg.epsilon, cfg.t_cap, cap)
        entry = res.to_dict()
        entry.update(beta=beta, violations=[b.name for b in bound_violations(res)], **extra)
        results.append(entry)
        tvals.append(res.t_mix_exact)
        rows.extend([beta, t, v] for t, v in res.tv_curve)
    doc = _envelope(cfg, results, log_tmix_slope=slope_fit(cfg.betas, tvals))
    return doc, rows, ["beta", "t", "worst_tv"]


def cmd_observables(cfg: RunConfig):
    game = _load(cfg)
    _enumerable(cfg, game)
    if not isinstance(game, LocalInteractionGame):
        raise GameSpecError("observables needs a local interaction game (--game)")
    obs = []
    if game.space.is_binary:
        obs += [Observable.diff(game.space), Observable.monoc(game)]
    if cfg.observable:
        obs.append(Observable.from_csv(cfg.observable, game.space))
    if not obs:
        raise GameSpecError("no observable: Diff/MonoC need binary strategies; pass --observable")
    results, rows = [], []
    for beta in cfg.betas:
        for o in obs:
            g = invariance_gap(game, o, beta)
            entry = {"beta": beta, "observable": o.name, **g.to_dict(),
                     "gap": abs(g.one_logit - g.all_logit)}
            results.append(entry)
            rows.append([beta, o.name, g.one_logit, g.all_logit, entry["gap"], g.alpha,
                         g.decomposable, g.bound_pass])
    return _envelope(cfg, results), rows, ["beta", "observable", "one_logit", "all_logit", "gap",
                                           "alpha", "decomposable", "bound_pass"]


def _batch_stats(values: np.ndarray, batches: int = 20) -> tuple[float, float]:
    """Mean and batch-means standard error."""
    k = len(values) // batches
    if k == 0:
        return float(values.mean()), math.inf
    means = values[: k * batches].reshape(batches, k).mean(axis=1)
    return float(values.mean()), float(means.std(ddof=1) / math.sqrt(batches))


def cmd_simulate(cfg: RunConfig):
    if cfg.seed is None:
        raise GameSpecError("simulate requires --seed")
    game = _load(cfg)
    start = cfg.start if cfg.start is not None else (0,) * game.n
    results = []
    rows = []
    for chain, beta in enumerate(cfg.betas):
        rng = make_rng(cfg.seed, chain)
        entry = {"beta": beta, "kind": cfg.kind, "steps": cfg.steps, "seed": cfg.seed,
                 "chain_id": chain}
        small = game.space.size <= min(cfg.cap_states, cfg.cap_matrix)
        if small:
            traj = simulate(game, start, beta, cfg.kind, cfg.steps, rng)
            occ = np.bincount(traj, minlength=game.space.size) / len(traj)
            exact = (stationary_by_solve(all_logit_kernel(game, beta, cap=cfg.cap_matrix))
                     if cfg.kind == ALL_LOGIT else gibbs(game, beta))
            entry["occupancy"] = occ
            entry["tv_to_stationary"] = total_variation(occ, exact)
            profiles = game.space.profiles[traj]
        elif isinstance(game, LocalInteractionGame):
            profiles = simulate_local(game, start, beta, cfg.kind, cfg.steps, rng)
        else:
            raise CapExceeded(f"|S| = {game.space.size} too large to simulate a potential-table game")
        if game.space.is_binary:
            d = (2 * profiles.astype(np.int64) - 1).sum(axis=1)
            mean, se = _batch_stats(d[1:].astype(float))
            entry.update(diff_mean=mean, diff_stderr=se, diff_ci3_low=mean - 3 * se,
                         diff_ci3_high=mean + 3 * se)
            rows.append([beta, cfg.kind, cfg.steps, mean, se])
        results.append(entry)
    doc = _envelope(cfg, results)
    return doc, rows, ["beta", "kind", "steps", "diff_mean", "diff_stderr"]


def cmd_curie_weiss(cfg: RunConfig):
    ns = cfg.ns
    results, rows = [], []
    for n in ns:
        for beta in cfg.betas:
            b = cw_bounds(n, beta)
            entry = b.to_dict()
            chain = cw_lumped_kernel(n, beta)
            lumped_pi = chain.stationary().probs
            lumped = exact_mixing_time(chain.kernel, lumped_pi, cfg.epsilon, cfg.t_cap,
                                       cap=config.MIXING_CAP)
            entry["lumped_t_mix"] = lumped.t_mix_exact
            exact = None
            if 2 ** n <= min(cfg.cap_matrix, config.MIXING_CAP, cfg.cap_states):
                game = cw_game(n)
                kernel = all_logit_kernel(game, beta)
                pi = all_logit_stationary_closed_form(game, beta).probs
                exact = exact_mixing_time(kernel, pi, cfg.epsilon, cfg.t_cap).t_mix_exact
                entry["pushforward_error"] = float(np.max(np.abs(diff_pushforward(pi, n) - lumped_pi)))
            entry["exact_t_mix"] = exact
            entry["estimate_kind"] = "exact" if exact is not None else "lumped_lower_bound"
            results.append(entry)
            est = exact if exact is not None else lumped.t_mix_exact
            rows.append([n, beta, b.log_lower, est, entry["estimate_kind"], b.log_upper_general,
                         b.log_upper_highbeta if b.highbeta_applicable else None, b.regime])
    doc = _envelope(cfg, results, ns=list(ns))
    return doc, rows, ["n", "beta", "log_lower", "t_mix", "estimate", "log_upper_general",
                       "log_upper_highbeta", "regime"]


COMMANDS = {
    "analyze": cmd_analyze,
    "stationary": cmd_stationary,
    "mixing": cmd_mixing,
    "observables": cmd_observables,
    "simulate": cmd_simulate,
    "curie-weiss": cmd_curie_weiss,
}


# --------------------------------------------------------------------------
# argument parsing


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("--seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logitdyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"logitdyn {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--game", metavar="PATH", help="local interaction game spec (JSON)")
    common.add_argument("--potential-table", metavar="PATH", help="raw potential table (JSON)")
    common.add_argument("--beta", type=_float_list, default=(1.0,), metavar="LIST",
                        help="comma-separated inverse noise values")
    common.add_argument("--epsilon", type=float, default=0.25)
    common.add_argument("--seed", type=_seed, default=None)
    common.add_argument("--cap-states", type=int, default=config.STATE_CAP, metavar="N")
    common.add_argument("--cap-matrix", type=int, default=config.MATRIX_CAP, metavar="N")
    common.add_argument("--t-cap", type=int, default=10**12, metavar="N")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("analyze", "stationary", "mixing", "observables"):
        sp = sub.add_parser(name, parents=[common])
        if name == "observables":
            sp.add_argument("--observable", metavar="PATH", help="CSV of (index, value)")
    sp = sub.add_parser("simulate", parents=[common])
    sp.add_argument("--steps", type=int, default=10**5)
    sp.add_argument("--kind", choices=KINDS, default=ALL_LOGIT)
    sp.add_argument("--start", type=_int_list, default=None, metavar="PROFILE",
                    help="comma-separated strategy indices (default all zeros)")
    sp = sub.add_parser("curie-weiss", parents=[common])
    sp.add_argument("--n", type=_int_list, default=(4,), metavar="LIST")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        game_path=args.game,
        potential_path=args.potential_table,
        betas=tuple(args.beta),
        epsilon=args.epsilon,
        cap_states=args.cap_states,
        cap_matrix=args.cap_matrix,
        t_cap=args.t_cap,
        seed=args.seed,
        out=args.out,
        fmt=args.format,
        steps=getattr(args, "steps", 0),
        kind=getattr(args, "kind", ALL_LOGIT),
        start=getattr(args, "start", None),
        observable=getattr(args, "observable", None),
        ns=tuple(getattr(args, "n", ())),
    )


def run(cfg: RunConfig):
    doc, rows, header = COMMANDS[cfg.command](cfg)
    _emit(cfg, doc, rows, header)
    return doc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run(config_from_args(args))
    except CapExceeded as exc:
        print(f"logitdyn: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InconsistencyError, ConvergenceError) as exc:
        print(f"logitdyn: consistency failure: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (GameSpecError, ValueError, OSError) as exc:
        print(f"logitdyn: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

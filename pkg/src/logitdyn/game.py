"""Strategic games, potential games and local interaction games.

Profiles are tuples of strategy indices. The profile space S is enumerated in
C order (player 0 is the most significant digit), so for two binary players the
flat order is (0,0), (0,1), (1,0), (1,1). For binary games index 0 stands for
the strategy -1 and index 1 for +1.

Potential sign convention: a potential decreases when the deviating player's
utility increases,

    u_i(x_-i, y) - u_i(x_-i, z) = Phi(x_-i, z) - Phi(x_-i, y),

so low-potential profiles are the attractive ones and the Gibbs measure is
proportional to exp(-beta * Phi).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import config
from .errors import CapExceeded, GameSpecError, InconsistencyError

Profile = tuple[int, ...]


@dataclass(frozen=True)
class StrategySpace:
    """Product space S = S_1 x ... x S_n given by the sizes |S_i|."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if len(sizes) < 1:
            raise GameSpecError("a game needs at least one player")
        if any(s < 1 for s in sizes):
            raise GameSpecError(f"strategy set sizes must be positive, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @cached_property
    def size(self) -> int:
        return int(np.prod(self.sizes, dtype=object))

    @cached_property
    def strides(self) -> np.ndarray:
        strides = np.ones(self.n, dtype=np.intp)
        for i in range(self.n - 2, -1, -1):
            strides[i] = strides[i + 1] * self.sizes[i + 1]
        return strides

    def check_cap(self, cap: int | None = None, what: str = "profile space") -> None:
        cap = config.STATE_CAP if cap is None else cap
        if self.size > cap:
            raise CapExceeded(f"{what} has {self.size} profiles, budget is {cap}")

    @cached_property
    def profiles(self) -> np.ndarray:
        """All profiles as an (|S|, n) integer array in flat-index order."""
        self.check_cap()
        grids = np.indices(self.sizes).reshape(self.n, -1).T
        grids.setflags(write=False)
        return grids

    def validate(self, x: Sequence[int]) -> Profile:
        x = tuple(int(s) for s in x)
        if len(x) != self.n:
            raise GameSpecError(f"profile {x} has length {len(x)}, expected {self.n}")
        for i, (s, m) in enumerate(zip(x, self.sizes)):
            if not 0 <= s < m:
                raise GameSpecError(f"strategy {s} of player {i} out of range [0, {m})")
        return x

    def index(self, x: Sequence[int]) -> int:
        return int(np.dot(self.validate(x), self.strides))

    def profile(self, idx: int) -> Profile:
        if not 0 <= idx < self.size:
            raise IndexError(f"profile index {idx} out of range [0, {self.size})")
        return tuple(int(v) for v in np.unravel_index(idx, self.sizes))

    def player_index(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"player {i} out of range [0, {self.n})")
        return i

    def swap_index(self, i: int) -> np.ndarray:
        """Matrix D with D[x, y] = flat index of (x_-i, y_i)."""
        X = self.profiles
        base = np.arange(self.size, dtype=np.intp)
        delta = (X[None, :, i] - X[:, None, i]) * self.strides[i]
        return base[:, None] + delta

    @property
    def is_binary(self) -> bool:
        return all(s == 2 for s in self.sizes)

    def hamming(self) -> np.ndarray:
        """(|S|, |S|) matrix of Hamming distances between profiles."""
        X = self.profiles
        return (X[:, None, :] != X[None, :, :]).sum(axis=2)


# --------------------------------------------------------------------------
# games


class Game:
    """Common interface: a strategy space plus per-player utility tables."""

    space: StrategySpace

    @property
    def n(self) -> int:
        return self.space.n

    def utility_tables(self) -> np.ndarray:
        """(n, |S|) array with row i holding u_i over the flat profile order."""
        raise NotImplementedError

    def potential_table(self) -> np.ndarray:
        """Exact potential over the flat profile order."""
        raise NotImplementedError

    def utility(self, i: int, x: Sequence[int]) -> float:
        i = self.space.player_index(i)
        return float(self.utility_tables()[i, self.space.index(x)])

    def potential(self, x: Sequence[int]) -> float:
        return float(self.potential_table()[self.space.index(x)])


@dataclass(frozen=True, eq=False)
class EdgeGame:
    """Two-player exact potential game played on the edge (u, v).

    ``payoff_u[s, t]`` and ``payoff_v[s, t]`` are the payoffs of u and v when u
    plays s and v plays t. The potential is anchored so that
    ``potential[0, 0] == -payoff_u[0, 0]``.
    """

    u: int
    v: int
    payoff_u: np.ndarray
    payoff_v: np.ndarray
    atol: float = config.ATOL
    potential: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.u == self.v:
            raise GameSpecError(f"edge ({self.u}, {self.v}) is a self-loop")
        pu = np.array(self.payoff_u, dtype=float)
        pv = np.array(self.payoff_v, dtype=float)
        if pu.ndim != 2 or pu.shape != pv.shape:
            raise GameSpecError(
                f"edge ({self.u}, {self.v}): payoff matrices must be 2-D with equal shapes, "
                f"got {pu.shape} and {pv.shape}")
        if not (np.all(np.isfinite(pu)) and np.all(np.isfinite(pv))):
            raise GameSpecError(f"edge ({self.u}, {self.v}): payoffs must be finite")
        # v-differences hold by construction; u-differences are the exactness test
        phi = -pu[:, [0]] - pv + pv[:, [0]]
        gap = pu + phi
        violation = float(np.max(gap.max(axis=0) - gap.min(axis=0)))
        if violation > self.atol:
            raise GameSpecError(
                f"edge ({self.u}, {self.v}) is not an exact potential game "
                f"(4-circuit utility improvement {violation:.3g})")
        for name, arr in (("payoff_u", pu), ("payoff_v", pv), ("potential", phi)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.payoff_u.shape

    @property
    def spread(self) -> float:
        """Edge weight w_e: the largest potential difference inside the edge game."""
        return float(self.potential.max() - self.potential.min())

    @classmethod
    def coordination(cls, u: int, v: int, a: float, b: float, c: float, d: float) -> "EdgeGame":
        """Symmetric 2x2 game with rows/cols (-, +) and cells (a,a) (c,d) / (d,c) (b,b)."""
        return cls(u, v, [[a, c], [d, b]], [[a, d], [c, b]])

    @classmethod
    def from_potential(cls, u: int, v: int, phi) -> "EdgeGame":
        """Pure-potential edge game with u_u = u_v = -phi."""
        phi = np.asarray(phi, dtype=float)
        return cls(u, v, -phi, -phi)


@dataclass(frozen=True, eq=False)
class LocalInteractionGame(Game):
    """Players on the vertices of a graph; each edge carries an EdgeGame."""

    space: StrategySpace
    edges: tuple[EdgeGame, ...] = ()

    def __post_init__(self):
        edges = tuple(self.edges)
        seen = set()
        for e in edges:
            for w in (e.u, e.v):
                if not 0 <= w < self.space.n:
                    raise GameSpecError(f"edge ({e.u}, {e.v}) references unknown player {w}")
            key = frozenset((e.u, e.v))
            if key in seen:
                raise GameSpecError(
                    f"parallel edge ({e.u}, {e.v}); sum the interactions into one edge game")
            seen.add(key)
            expected = (self.space.sizes[e.u], self.space.sizes[e.v])
            if e.shape != expected:
                raise GameSpecError(
                    f"edge ({e.u}, {e.v}) has payoff shape {e.shape}, strategy sizes require {expected}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def build(cls, sizes: Sequence[int], edges: Sequence[EdgeGame] = ()) -> "LocalInteractionGame":
        return cls(StrategySpace(tuple(sizes)), tuple(edges))

    @property
    def edge_pairs(self) -> list[tuple[int, int]]:
        return [(e.u, e.v) for e in self.edges]

    def utility(self, i: int, x: Sequence[int]) -> float:
        i = self.space.player_index(i)
        x = self.space.validate(x)
        total = 0.0
        for e in self.edges:
            if e.u == i:
                total += e.payoff_u[x[e.u], x[e.v]]
            elif e.v == i:
                total += e.payoff_v[x[e.u], x[e.v]]
        return float(total)

    def potential(self, x: Sequence[int]) -> float:
        x = self.space.validate(x)
        return float(sum(e.potential[x[e.u], x[e.v]] for e in self.edges))

    @cached_property
    def _utility_tables(self) -> np.ndarray:
        X = self.space.profiles
        U = np.zeros((self.n, self.space.size))
        for e in self.edges:
            U[e.u] += e.payoff_u[X[:, e.u], X[:, e.v]]
            U[e.v] += e.payoff_v[X[:, e.u], X[:, e.v]]
        U.setflags(write=False)
        return U

    def utility_tables(self) -> np.ndarray:
        return self._utility_tables

    @cached_property
    def _potential_table(self) -> np.ndarray:
        X = self.space.profiles
        phi = np.zeros(self.space.size)
        for e in self.edges:
            phi += e.potential[X[:, e.u], X[:, e.v]]
        phi.setflags(write=False)
        return phi

    def potential_table(self) -> np.ndarray:
        return self._potential_table


@dataclass(frozen=True, eq=False)
class TableGame(Game):
    """Normal-form game given by full utility tables (n, |S|)."""

    space: StrategySpace
    utilities: np.ndarray
    phi: np.ndarray | None = None

    def __post_init__(self):
        U = np.array(self.utilities, dtype=float)
        if U.shape != (self.space.n, self.space.size):
            raise GameSpecError(
                f"utility tables must have shape {(self.space.n, self.space.size)}, got {U.shape}")
        if not np.all(np.isfinite(U)):
            raise GameSpecError("utilities must be finite")
        U.setflags(write=False)
        object.__setattr__(self, "utilities", U)
        if self.phi is not None:
            phi = np.array(self.phi, dtype=float).reshape(-1)
            phi.setflags(write=False)
            object.__setattr__(self, "phi", phi)

    @classmethod
    def from_potential(cls, space: StrategySpace, phi) -> "TableGame":
        """Game in which every player's utility is -phi; phi is its exact potential."""
        phi = np.asarray(phi, dtype=float).reshape(-1)
        if phi.shape != (space.size,):
            raise GameSpecError(f"potential table must have {space.size} entries, got {phi.size}")
        return cls(space, np.tile(-phi, (space.n, 1)), phi)

    def utility_tables(self) -> np.ndarray:
        return self.utilities

    @cached_property
    def _potential_table(self) -> np.ndarray:
        if self.phi is not None:
            return self.phi
        return potential_from_utilities(self.space, self.utilities)

    def potential_table(self) -> np.ndarray:
        return self._potential_table


# --------------------------------------------------------------------------
# operations


def utility(game: Game, i: int, x: Sequence[int]) -> float:
    """Utility of player i at profile x."""
    return game.utility(i, x)


def potential(game: Game, x: Sequence[int]) -> float:
    """Potential of profile x; for local interaction games the sum of edge potentials."""
    return game.potential(x)


class ExactnessCheck(NamedTuple):
    is_exact: bool
    max_violation: float
    witness: list[Profile] | None


def _as_tables(space: StrategySpace, utilities) -> np.ndarray:
    space.check_cap()
    U = np.asarray(utilities, dtype=float)
    if U.shape != (space.n, space.size):
        raise GameSpecError(f"utility tables must have shape {(space.n, space.size)}, got {U.shape}")
    return U


def check_exact_potential(space: StrategySpace, utilities, atol: float = config.ATOL) -> ExactnessCheck:
    """Test every length-4 circuit for zero utility improvement.

    Returns the worst circuit as witness when the game is not a potential game.
    The witness is the list of five profiles x, z, y, w, x where player i
    deviates on the first and third step and player j on the second and fourth.
    """
    U = _as_tables(space, utilities)
    shape = space.shape
    worst, witness = 0.0, None
    for i, j in itertools.combinations(range(space.n), 2):
        A = np.moveaxis(U[i].reshape(shape), (i, j), (0, 1))
        B = np.moveaxis(U[j].reshape(shape), (i, j), (0, 1))
        rest = A.shape[2:]
        A = A.reshape(A.shape[0], A.shape[1], -1)
        B = B.reshape(B.shape[0], B.shape[1], -1)
        # axes: a, a', b, b', rest
        A_ab = A[:, None, :, None, :]
        A_pb = A[None, :, :, None, :]
        A_pq = A[None, :, None, :, :]
        A_aq = A[:, None, None, :, :]
        B_ab = B[:, None, :, None, :]
        B_pb = B[None, :, :, None, :]
        B_pq = B[None, :, None, :, :]
        B_aq = B[:, None, None, :, :]
        imp = (A_pb - A_ab) + (B_pq - B_pb) + (A_aq - A_pq) + (B_ab - B_aq)
        k = int(np.argmax(np.abs(imp)))
        val = float(np.abs(imp).flat[k])
        if val > worst:
            worst = val
            a, ap, b, bp, r = np.unravel_index(k, imp.shape)
            others = np.unravel_index(r, rest) if rest else ()
            others = [int(o) for o in others]

            def prof(si, sj):
                p = list(others)
                lo, hi = (i, si), (j, sj)
                p.insert(lo[0], lo[1])
                p.insert(hi[0], hi[1])
                return tuple(p)

            witness = [prof(a, b), prof(ap, b), prof(ap, bp), prof(a, bp), prof(a, b)]
    ok = worst <= atol
    return ExactnessCheck(ok, worst, None if ok else witness)


def potential_from_utilities(space: StrategySpace, utilities, atol: float = config.ATOL) -> np.ndarray:
    """Integrate unilateral utility differences into a potential with Phi(0,...,0) = 0.

    The canonical path sets the players' strategies one at a time, player 0
    first. Raises InconsistencyError if the result violates the defining
    difference identity (the game has no exact potential).
    """
    U = _as_tables(space, utilities)
    shape, n = space.shape, space.n
    phi = np.zeros(shape)
    for i in range(n):
        Ui = U[i].reshape(shape)
        idx = tuple(slice(None) if k <= i else slice(0, 1) for k in range(n))
        sub = Ui[idx]
        phi = phi - (sub - np.take(sub, [0], axis=i))
    for i in range(n):
        gap = U[i].reshape(shape) + phi
        violation = float(np.max(gap.max(axis=i) - gap.min(axis=i)))
        if violation > atol:
            raise InconsistencyError(
                f"utilities admit no exact potential (player {i} mismatch {violation:.3g})")
    return phi.reshape(-1)


@dataclass(frozen=True)
class TwoPlayerPotentialTerm:
    """A potential depending only on players pair[0] and pair[1]."""

    pair: tuple[int, int]
    table: np.ndarray

    def expand(self, space: StrategySpace) -> np.ndarray:
        u, v = self.pair
        X = space.profiles
        return self.table[X[:, u], X[:, v]]


class Decomposition(NamedTuple):
    terms: list[TwoPlayerPotentialTerm]
    residual: np.ndarray


def default_pair_order(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def decompose_potential(space: StrategySpace, phi, anchor: Sequence[int] | None = None,
                        pair_order: Sequence[tuple[int, int]] | None = None) -> Decomposition:
    """Peel two-player potentials off phi, one pair at a time.

    With theta_0 = phi, the term for the i-th pair (u, v) is theta_{i-1}
    evaluated with every other player fixed at the anchor, and
    theta_i = theta_{i-1} - term. Always phi == sum(terms) + residual; the
    residual vanishes identically exactly when phi is a sum of two-player
    potentials (n >= 2).
    """
    space.check_cap()
    n, shape = space.n, space.shape
    phi = np.asarray(phi, dtype=float).reshape(-1)
    if phi.shape != (space.size,):
        raise GameSpecError(f"potential table must have {space.size} entries, got {phi.size}")
    anchor = (0,) * n if anchor is None else space.validate(anchor)
    if pair_order is None:
        pair_order = default_pair_order(n)
    else:
        pair_order = [(int(u), int(v)) for u, v in pair_order]
        unordered = sorted(tuple(sorted(p)) for p in pair_order)
        if unordered != default_pair_order(n) or any(u == v for u, v in pair_order):
            raise ValueError("pair_order must list every unordered pair of players exactly once")

    theta = phi.reshape(shape).copy()
    terms = []
    for u, v in pair_order:
        idx = tuple(slice(None) if k in (u, v) else anchor[k] for k in range(n))
        sliced = theta[idx].copy()  # axes in increasing player order
        bshape = [1] * n
        bshape[u], bshape[v] = shape[u], shape[v]
        theta -= sliced.reshape(bshape)
        terms.append(TwoPlayerPotentialTerm((u, v), sliced if u < v else sliced.T))
    return Decomposition(terms, theta.reshape(-1))


def ball_mask(space: StrategySpace, center: Sequence[int], radius: int) -> np.ndarray:
    """Boolean mask of profiles within Hamming distance ``radius`` of center."""
    center = np.asarray(space.validate(center))
    return (space.profiles != center).sum(axis=1) <= radius


# --------------------------------------------------------------------------
# JSON game specs


def _field(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise GameSpecError(f"{where}: missing field '{key}'")
    return obj[key]


def game_from_dict(spec: dict) -> LocalInteractionGame:
    """Build a LocalInteractionGame from the game-spec JSON object."""
    n = _field(spec, "players", "game spec")
    sizes = spec.get("strategy_sizes", [2] * n if isinstance(n, int) else None)
    if not isinstance(n, int) or n < 1:
        raise GameSpecError(f"game spec: 'players' must be a positive integer, got {n!r}")
    if not isinstance(sizes, list) or len(sizes) != n:
        raise GameSpecError(f"game spec: 'strategy_sizes' must be a list of {n} integers")
    space = StrategySpace(tuple(sizes))
    edges = []
    for k, edge in enumerate(spec.get("edges", [])):
        where = f"edges[{k}]"
        u, v = _field(edge, "u", where), _field(edge, "v", where)
        try:
            edges.append(EdgeGame(int(u), int(v), _field(edge, "payoff_u", where),
                                  _field(edge, "payoff_v", where)))
        except GameSpecError as exc:
            raise GameSpecError(f"{where}: {exc}") from None
        except (TypeError, ValueError) as exc:
            raise GameSpecError(f"{where}: bad payoff matrix ({exc})") from None
    try:
        return LocalInteractionGame(space, tuple(edges))
    except GameSpecError as exc:
        raise GameSpecError(f"game spec: {exc}") from None


def game_to_dict(game: LocalInteractionGame) -> dict:
    return {
        "players": game.n,
        "strategy_sizes": list(game.space.sizes),
        "edges": [{"u": e.u, "v": e.v, "payoff_u": e.payoff_u.tolist(),
                   "payoff_v": e.payoff_v.tolist()} for e in game.edges],
    }


def potential_game_from_dict(spec: dict) -> TableGame:
    """Raw potential-table mode: {"strategy_sizes": [...], "potential": [...]}.

    The potential is listed in flat profile order (C order).
    """
    sizes = _field(spec, "strategy_sizes", "potential table")
    values = _field(spec, "potential", "potential table")
    if not isinstance(sizes, list):
        raise GameSpecError("potential table: 'strategy_sizes' must be a list")
    space = StrategySpace(tuple(sizes))
    try:
        phi = np.asarray(values, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise GameSpecError(f"potential table: bad 'potential' values ({exc})") from None
    if phi.size != space.size or not np.all(np.isfinite(phi)):
        raise GameSpecError(
            f"potential table: expected {space.size} finite values, got {phi.size}")
    return TableGame.from_potential(space, phi)


def _load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameSpecError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_game(path) -> LocalInteractionGame:
    return game_from_dict(_load_json(path))


def load_potential_game(path) -> TableGame:
    return potential_game_from_dict(_load_json(path))


def bipartition_sides(game: LocalInteractionGame, left) -> tuple[list[int], list[int]]:
    """Validate that ``left`` and its complement split every edge of the graph."""
    n = game.n
    left = sorted({int(v) for v in left})
    if any(not 0 <= v < n for v in left):
        raise GameSpecError(f"bipartition side {left} references players outside [0, {n})")
    right = [v for v in range(n) if v not in set(left)]
    side = np.zeros(n, dtype=bool)
    side[left] = True
    for u, v in game.edge_pairs:
        if side[u] == side[v]:
            raise GameSpecError(f"edge ({u}, {v}) lies inside one side of the bipartition")
    return left, right

"""Aggregation games: goals plus payoffs on top of an aggregation rule.

Preferences are quasi-dichotomous: a voter first cares whether the collective
outcome satisfies their goal, and only then compares payoffs. All payoffs are
``Fraction``; the kernels see them multiplied by a common denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import kernels
from .core import (
    DEFAULT_CAP,
    Aggregator,
    BAStructure,
    Ballot,
    Coalition,
    DimensionError,
    Profile,
    outcome_table,
    validate,
)
from .logic import Formula, GoalCube, max_atom, satisfies, try_cube


# -- payoff tables ---------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    values: tuple[Fraction, ...]


@dataclass(frozen=True)
class Uniform:
    """Payoffs defined on outcomes: ``values[i][outcome_index]``."""

    values: tuple[tuple[Fraction, ...], ...]


@dataclass(frozen=True, eq=False)
class Full:
    """Payoffs per profile: ``base`` plus ``delta[i, p] / denominator``.

    ``delta`` is an ``(n, profiles)`` integer array (int64 or Python ints).
    """

    base: Union[Constant, Uniform]
    delta: np.ndarray
    denominator: int = 1

    def __post_init__(self):
        delta = np.asarray(self.delta)
        if delta.dtype != object and delta.dtype.kind not in "iu":
            raise TypeError("delta must hold integers")
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        object.__setattr__(self, "delta", delta)

    def __eq__(self, other):
        if not isinstance(other, Full) or self.base != other.base:
            return False
        if self.delta.shape != other.delta.shape:
            return False
        return bool(np.all(
            self.delta.astype(object) * other.denominator
            == other.delta.astype(object) * self.denominator
        ))

    __hash__ = None

    def value(self, i: int, p: int) -> Fraction:
        return Fraction(int(self.delta[i, p]), self.denominator)


def full_from_values(base: Union[Constant, Uniform], structure: BAStructure, entries: Mapping[tuple[int, int], Fraction]) -> Full:
    """Full table equal to a constant ``base`` except at (voter, profile) pairs."""
    if not isinstance(base, Constant):
        raise ValueError("sparse full tables need a constant base")
    den = math.lcm(1, *(Fraction(v).denominator for v in entries.values()),
                   *(v.denominator for v in base.values))
    delta = np.zeros((structure.n, structure.n_profiles), dtype=object)
    for (i, p), v in entries.items():
        delta[i, p] = int((Fraction(v) - base.values[i]) * den)
    return Full(base, _compact(delta), den)


def _compact(arr: np.ndarray) -> np.ndarray:
    """int64 copy when every entry fits, otherwise an object array."""
    if arr.dtype != object:
        return arr
    if arr.size == 0 or max(abs(int(arr.max())), abs(int(arr.min()))) < kernels.INT64_SAFE:
        return arr.astype(np.int64)
    return arr


PayoffTable = Union[Constant, Uniform, Full]


def constant(values: Iterable) -> Constant:
    return Constant(tuple(Fraction(v) for v in values))


def uniform(values: Iterable[Iterable]) -> Uniform:
    return Uniform(tuple(tuple(Fraction(v) for v in row) for row in values))


def _table_values(table: PayoffTable) -> Iterable[Fraction]:
    if isinstance(table, Constant):
        yield from table.values
    elif isinstance(table, Uniform):
        for row in table.values:
            yield from row
    else:
        yield from _table_values(table.base)


def _check_table(table: PayoffTable, s: BAStructure) -> None:
    if isinstance(table, Constant):
        if len(table.values) != s.n:
            raise DimensionError(f"{len(table.values)} constant payoffs for {s.n} voters")
    elif isinstance(table, Uniform):
        if len(table.values) != s.n or any(len(r) != s.n_ballots for r in table.values):
            raise DimensionError(f"uniform payoffs must be {s.n} x {s.n_ballots}")
    else:
        _check_table(table.base, s)
        if table.delta.shape != (s.n, s.n_profiles):
            raise DimensionError(f"full payoffs must be {s.n} x {s.n_profiles}")


# -- games -----------------------------------------------------------------


@dataclass(frozen=True)
class AggregationGame:
    structure: BAStructure
    aggregator: Aggregator
    goals: tuple[Formula, ...]
    payoffs: PayoffTable
    cap: int = field(default=DEFAULT_CAP, compare=False)

    def __post_init__(self):
        s = self.structure
        object.__setattr__(self, "goals", tuple(self.goals))
        if len(self.goals) != s.n:
            raise DimensionError(f"{len(self.goals)} goals for {s.n} voters")
        for g in self.goals:
            if max_atom(g) >= s.m:
                raise DimensionError(f"goal mentions p{max_atom(g) + 1} but m={s.m}")
        validate(self.aggregator, s)
        _check_table(self.payoffs, s)

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def m(self) -> int:
        return self.structure.m

    def replace_payoffs(self, payoffs: PayoffTable) -> "AggregationGame":
        return AggregationGame(self.structure, self.aggregator, self.goals, payoffs, self.cap)

    @cached_property
    def cubes(self) -> tuple[GoalCube | None, ...]:
        return tuple(try_cube(g) for g in self.goals)

    @property
    def all_cubes(self) -> bool:
        return all(c is not None for c in self.cubes)

    @cached_property
    def outcomes(self) -> np.ndarray:
        return outcome_table(self.aggregator, self.structure, self.cap)

    @cached_property
    def sat(self) -> np.ndarray:
        """``sat[i, o]``: does outcome ballot ``o`` satisfy voter i's goal."""
        s = self.structure
        return np.array(
            [[satisfies(s.ballot(o), g) for o in range(s.n_ballots)] for g in self.goals],
            dtype=bool,
        )

    @cached_property
    def scale(self) -> int:
        extra = self.payoffs.denominator if isinstance(self.payoffs, Full) else 1
        return math.lcm(extra, *(v.denominator for v in _table_values(self.payoffs)))

    @cached_property
    def scaled_payoffs(self) -> np.ndarray:
        """``(n, profiles)`` integer payoffs times ``scale``."""
        self.structure.check_cap(self.cap)
        return _compact(_dense(self.payoffs, self.outcomes, self.structure, self.scale))

    # -- exact lookups -----------------------------------------------------

    def index(self, profile: Sequence[Sequence[int]]) -> int:
        return self.structure.profile_index(profile)

    def outcome(self, profile: Sequence[Sequence[int]]) -> Ballot:
        return self.structure.ballot(int(self.outcomes[self.index(profile)]))

    def payoff(self, i: int, profile: Sequence[Sequence[int]] | int) -> Fraction:
        p = profile if isinstance(profile, int) else self.index(profile)
        return _lookup(self.payoffs, i, p, int(self.outcomes[p]))

    def goal_met(self, i: int, profile: Sequence[Sequence[int]] | int) -> bool:
        p = profile if isinstance(profile, int) else self.index(profile)
        return bool(self.sat[i, self.outcomes[p]])


def _lookup(table: PayoffTable, i: int, p: int, o: int) -> Fraction:
    if isinstance(table, Constant):
        return table.values[i]
    if isinstance(table, Uniform):
        return table.values[i][o]
    return _lookup(table.base, i, p, o) + table.value(i, p)


def _dense(table: PayoffTable, outcomes, s: BAStructure, sc: int) -> np.ndarray:
    """Scaled payoffs as an object array of Python ints."""
    if isinstance(table, Constant):
        col = np.array([int(v * sc) for v in table.values], dtype=object)
        return np.repeat(col[:, None], s.n_profiles, axis=1)
    if isinstance(table, Uniform):
        rows = np.array([[int(v * sc) for v in row] for row in table.values], dtype=object)
        return rows[:, outcomes]
    return _dense(table.base, outcomes, s, sc) + table.delta.astype(object) * (sc // table.denominator)


# -- preferences -----------------------------------------------------------


def prefers(game: AggregationGame, i: int, b1: Profile, b2: Profile) -> bool:
    """Weak preference of voter ``i`` for profile ``b1`` over ``b2``."""
    p1, p2 = game.index(b1), game.index(b2)
    s1, s2 = game.goal_met(i, p1), game.goal_met(i, p2)
    if s1 != s2:
        return s1
    return game.payoff(i, p1) >= game.payoff(i, p2)


def strictly_prefers(game: AggregationGame, i: int, b1: Profile, b2: Profile) -> bool:
    return prefers(game, i, b1, b2) and not prefers(game, i, b2, b1)


def is_truthful(game: AggregationGame, i: int, ballot: Sequence[int]) -> bool:
    return satisfies(ballot, game.goals[i])


def _strict_by_index(game: AggregationGame, i: int, p: int, q: int) -> bool:
    """Voter i strictly prefers profile index p to q (scaled comparison)."""
    sp, sq = game.goal_met(i, p), game.goal_met(i, q)
    if sp != sq:
        return sp
    pay = game.scaled_payoffs
    return pay[i, p] > pay[i, q]


def better_reply(game: AggregationGame, i: int, profile: Profile) -> Ballot | None:
    """Smallest ballot that voter ``i`` strictly prefers to their current one."""
    s = game.structure
    p = game.index(profile)
    shift = (s.n - 1 - i) * s.m
    cur = (p >> shift) & (s.n_ballots - 1)
    base = p - (cur << shift)
    for b in range(s.n_ballots):
        if b != cur and _strict_by_index(game, i, base | (b << shift), p):
            return s.ballot(b)
    return None


def nash_deviation(game: AggregationGame, profile: Profile) -> tuple[int, Ballot] | None:
    """First strictly improving unilateral deviation, by (voter, ballot)."""
    game.structure.check_profile(profile)
    for i in range(game.n):
        b = better_reply(game, i, tuple(profile))
        if b is not None:
            return i, b
    return None


def is_nash(game: AggregationGame, profile: Profile) -> bool:
    return nash_deviation(game, profile) is None


def nash_mask(game: AggregationGame) -> np.ndarray:
    return kernels.nash_mask(game.n, game.m, game.outcomes, game.sat, game.scaled_payoffs)


def enumerate_nash(game: AggregationGame) -> list[Profile]:
    """All pure Nash equilibria in increasing profile order."""
    s = game.structure
    return [s.profile(int(p)) for p in np.flatnonzero(nash_mask(game))]


# -- profile classes -------------------------------------------------------


def is_efficient(game: AggregationGame, profile: Profile, coalition: Iterable[int]) -> bool:
    p = game.index(profile)
    return all(game.goal_met(i, p) for i in coalition)


def is_totally_inefficient(game: AggregationGame, profile: Profile, coalition: Iterable[int]) -> bool:
    p = game.index(profile)
    return not any(game.goal_met(i, p) for i in coalition)


@dataclass(frozen=True)
class ProfileClassification:
    is_nash: bool
    truthful_for: Coalition
    efficient_for: dict
    totally_inefficient_for: dict

    def truthful(self, coalition: Iterable[int]) -> bool:
        return frozenset(coalition) <= self.truthful_for


def classify_profile(
    game: AggregationGame, profile: Profile, coalitions: Iterable[Iterable[int]] = ()
) -> ProfileClassification:
    coalitions = [frozenset(c) for c in coalitions] or [game.structure.everyone]
    return ProfileClassification(
        is_nash=is_nash(game, profile),
        truthful_for=frozenset(i for i in range(game.n) if is_truthful(game, i, profile[i])),
        efficient_for={c: is_efficient(game, profile, c) for c in coalitions},
        totally_inefficient_for={c: is_totally_inefficient(game, profile, c) for c in coalitions},
    )


# -- dominance -------------------------------------------------------------


def _voter_view(game: AggregationGame, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Goal flags and payoffs of voter ``i`` shaped ``(K,) * n``."""
    k = game.structure.n_ballots
    shape = (k,) * game.n
    return (
        game.sat[i][game.outcomes].reshape(shape),
        game.scaled_payoffs[i].reshape(shape),
    )


def best_response_table(game: AggregationGame, i: int) -> np.ndarray:
    """``(K, contexts)`` table: is ballot b a best response in each context."""
    s = game.structure
    mask = kernels.best_response_mask(
        s.n, s.m, i, game.sat[i][game.outcomes], game.scaled_payoffs[i]
    )
    k = s.n_ballots
    return np.moveaxis(mask.reshape((k,) * s.n), i, 0).reshape(k, -1)


def dominance_violation(game: AggregationGame, i: int, ballot: Sequence[int]) -> tuple[Profile, Ballot] | None:
    """Witness against weak dominance of ``ballot`` for voter ``i``.

    Returns the smallest profile (with ``ballot`` at position i) in which some
    alternative is strictly better, together with the smallest such
    alternative; None when ``ballot`` is weakly dominant.
    """
    s = game.structure
    s.check_cap(game.cap)
    b = s.ballot_index(ballot)
    row = best_response_table(game, i)[b]
    bad = np.flatnonzero(~row)
    if bad.size == 0:
        return None
    # contexts are ordered like profiles with voter i removed
    ctx = int(bad[0])
    k = s.n_ballots
    digits = np.unravel_index(ctx, (k,) * (s.n - 1))
    ballots = [s.ballot(int(d)) for d in digits]
    profile = tuple(ballots[:i] + [tuple(ballot)] + ballots[i:])
    return profile, better_reply(game, i, profile)


def is_weakly_dominant(game: AggregationGame, i: int, ballot: Sequence[int]) -> bool:
    return dominance_violation(game, i, ballot) is None


def weakly_dominant_ballots(game: AggregationGame, i: int) -> list[Ballot]:
    s = game.structure
    table = best_response_table(game, i)
    return [s.ballot(b) for b in np.flatnonzero(table.all(axis=1))]


def iesds(game: AggregationGame, max_rounds: int | None = None) -> tuple[frozenset, ...]:
    """Ballots surviving iterated elimination of strictly dominated strategies.

    Each round removes, for every voter simultaneously, each ballot strictly
    dominated by another surviving ballot against all surviving contexts.
    Only pure dominators are considered.
    """
    s = game.structure
    s.check_cap(game.cap)
    views = [_voter_view(game, i) for i in range(s.n)]
    alive = [list(range(s.n_ballots)) for _ in range(s.n)]
    rounds = 0
    while max_rounds is None or rounds < max_rounds:
        rounds += 1
        removed = []
        for i in range(s.n):
            sat, val = views[i]
            grid = np.ix_(*alive)
            sub_s = np.moveaxis(sat[grid], i, 0).reshape(len(alive[i]), -1)
            sub_v = np.moveaxis(val[grid], i, 0).reshape(len(alive[i]), -1)
            dead = set()
            for a in range(len(alive[i])):
                for d in range(len(alive[i])):
                    if d == a:
                        continue
                    better = (sub_s[d] & ~sub_s[a]) | ((sub_s[d] == sub_s[a]) & (sub_v[d] > sub_v[a]))
                    if better.all():
                        dead.add(alive[i][a])
                        break
            removed.append(dead)
        if not any(removed):
            break
        alive = [[b for b in alive[i] if b not in removed[i]] for i in range(s.n)]
    return tuple(frozenset(s.ballot(b) for b in row) for row in alive)


def dominant_strategy_equilibrium(game: AggregationGame) -> Profile | None:
    """Profile of weakly dominant ballots, if unique in the sense below.

    Every voter needs a weakly dominant ballot, and any other weakly dominant
    ballot of that voter must give the same outcome and the same payoff vector as
    the first one in every opponent context.
    """
    s = game.structure
    k = s.n_ballots
    pay = game.scaled_payoffs
    chosen = []
    for i in range(s.n):
        dom = weakly_dominant_ballots(game, i)
        if not dom:
            return None
        out = np.moveaxis(game.outcomes.reshape((k,) * s.n), i, 0).reshape(k, -1)
        pays = np.moveaxis(pay.reshape((s.n,) + (k,) * s.n), i + 1, 1).reshape(s.n, k, -1)
        first = s.ballot_index(dom[0])
        for other in dom[1:]:
            b = s.ballot_index(other)
            if not (np.array_equal(out[first], out[b]) and np.array_equal(pays[:, first], pays[:, b])):
                return None
        chosen.append(dom[0])
    return tuple(chosen)


# -- payoff classes --------------------------------------------------------


def is_uniform(game: AggregationGame) -> bool:
    if isinstance(game.payoffs, (Constant, Uniform)):
        return True
    pay = game.scaled_payoffs
    out = game.outcomes
    for i in range(game.n):
        order = np.argsort(out, kind="stable")
        o, v = out[order], pay[i][order]
        same = o[1:] == o[:-1]
        if np.any(v[1:][same] != v[:-1][same]):
            return False
    return True


def is_constant(game: AggregationGame) -> bool:
    if isinstance(game.payoffs, Constant):
        return True
    if isinstance(game.payoffs, Uniform):
        return all(len(set(row)) == 1 for row in game.payoffs.values)
    pay = game.scaled_payoffs
    return bool(np.all(pay == pay[:, :1]))


def outcome_payoffs(game: AggregationGame) -> list[dict[int, Fraction]]:
    """Per voter, payoff of every reachable outcome (uniform games only)."""
    if isinstance(game.payoffs, Constant):
        return [{o: v for o in range(game.structure.n_ballots)} for v in game.payoffs.values]
    if isinstance(game.payoffs, Uniform):
        return [dict(enumerate(row)) for row in game.payoffs.values]
    if not is_uniform(game):
        raise ValueError("payoffs are not uniform")
    firsts = {}
    for p, o in enumerate(game.outcomes.tolist()):
        firsts.setdefault(o, p)
    return [{o: game.payoff(i, p) for o, p in firsts.items()} for i in range(game.n)]

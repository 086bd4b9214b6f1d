"""Random instance generators and the property suites run by ``binvote verify``.

Every suite takes a ``random.Random`` and a count, builds that many random
games, and checks one structural claim on each. Failures carry a short text
witness so a run can be reproduced from its seed.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from . import core
from .core import BAStructure, ExplicitFamily, Majority, format_coalition
from .game import (
    AggregationGame,
    classify_profile,
    constant,
    enumerate_nash,
    is_efficient,
    is_nash,
    is_truthful,
    is_weakly_dominant,
    uniform,
)
from .logic import GoalCube, all_ballots, cubes_consistent, format_formula
from .negotiation import (
    Certified,
    Refuted,
    check_surviving,
    commitment_transfer,
    redistribute_for_coalition,
    verify_commitment,
)


# -- generators ------------------------------------------------------------


def random_cube(rng: random.Random, m: int, density: float = 0.5) -> GoalCube:
    return GoalCube.of({j: rng.randint(0, 1) for j in range(m) if rng.random() < density})


def sub_cube(rng: random.Random, ballot, density: float = 0.5) -> GoalCube:
    """Random cube satisfied by ``ballot``."""
    return GoalCube.of({j: v for j, v in enumerate(ballot) if rng.random() < density})


def random_values(rng: random.Random, count: int, lo: int = -3, hi: int = 3) -> list[Fraction]:
    """Small rationals; about one in four has denominator 2 or 3."""
    out = []
    for _ in range(count):
        v = Fraction(rng.randint(lo, hi))
        if rng.random() < 0.25:
            v += Fraction(1, rng.choice((2, 3)))
        out.append(v)
    return out


def random_uniform(rng: random.Random, n: int, m: int):
    return uniform([random_values(rng, 1 << m) for _ in range(n)])


def random_monotone_family(rng: random.Random, n: int) -> ExplicitFamily:
    """Upward closure of a few random nonempty coalitions."""
    seeds = []
    for _ in range(rng.randint(1, 3)):
        size = rng.randint(1, n)
        seeds.append(frozenset(rng.sample(range(n), size)))
    family = {c for c in core.all_coalitions(n) if any(s <= c for s in seeds)}
    return ExplicitFamily(frozenset(family))


def _game(n, m, agg, cubes, payoffs) -> AggregationGame:
    return AggregationGame(BAStructure(n, m), agg, tuple(c.formula() for c in cubes), payoffs)


def consistent_game(
    rng: random.Random, n: int, m: int, agg, coalition: Iterable[int], payoffs=None
) -> AggregationGame:
    """Uniform game whose coalition members share a random satisfying ballot."""
    coalition = set(coalition)
    target = tuple(rng.randint(0, 1) for _ in range(m))
    cubes = [sub_cube(rng, target) if i in coalition else random_cube(rng, m) for i in range(n)]
    return _game(n, m, agg, cubes, payoffs if payoffs is not None else random_uniform(rng, n, m))


def random_majority(rng: random.Random, n: int) -> frozenset:
    return frozenset(rng.sample(range(n), rng.randint((n + 1) // 2, n)))


# -- results ---------------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    cases: int = 0  # games generated
    checks: int = 0  # individual claims checked
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def skipped(self) -> bool:
        return self.cases == 0

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, text: str) -> None:
        self.failures.append(text)


def _timed(fn: Callable[..., SuiteResult]) -> Callable[..., SuiteResult]:
    def run(*args, **kwargs) -> SuiteResult:
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - start
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _describe(game: AggregationGame) -> str:
    goals = "; ".join(format_formula(g) for g in game.goals)
    return f"n={game.n} m={game.m} agg={game.aggregator} goals=[{goals}]"


def _profile(profile) -> str:
    return " ".join("".join(map(str, b)) for b in profile)


# -- suites ----------------------------------------------------------------


# test hook: lets the harness check that a broken predicate is caught
dominance_check: Callable[[AggregationGame, int, tuple], bool] = is_weakly_dominant


@_timed
def truthful_dominance(rng: random.Random, count: int, family: bool = False) -> SuiteResult:
    """Constant games with cube goals: every truthful ballot is weakly dominant."""
    res = SuiteResult("truthful-dominance" + ("-family" if family else ""))
    for _ in range(count):
        n, m = rng.choice((3, 5)), rng.choice((2, 3))
        agg = random_monotone_family(rng, n) if family else Majority()
        cubes = [random_cube(rng, m) for _ in range(n)]
        game = _game(n, m, agg, cubes, constant(random_values(rng, n)))
        res.cases += 1
        for i in range(n):
            for b in all_ballots(m):
                if not cubes[i].holds(b):
                    continue
                res.checks += 1
                if not dominance_check(game, i, b):
                    res.fail(f"{_describe(game)}: voter {i + 1} truthful {''.join(map(str, b))} not dominant")
    return res


@_timed
def resilient_existence(rng: random.Random, count: int) -> SuiteResult:
    """Resilient winning coalition with consistent goals: the witness/inverse profile is a good NE."""
    res = SuiteResult("resilient-existence")
    while res.cases < count:
        n, m = rng.choice((3, 5)), rng.choice((1, 2, 3))
        agg = Majority() if rng.random() < 0.6 else random_monotone_family(rng, n)
        s = BAStructure(n, m)
        resilient = sorted(core.resilient_winning_coalitions(agg, s), key=sorted)
        if not resilient:
            continue
        c = rng.choice(resilient)
        game = consistent_game(rng, n, m, agg, c)
        witness = cubes_consistent([game.cubes[i] for i in c], m)
        profile = tuple(witness if i in c else core.inverse_ballot(witness) for i in range(n))
        res.cases += 1
        res.checks += 1
        cls = classify_profile(game, profile, [c])
        if not (cls.is_nash and cls.truthful(c) and cls.efficient_for[c]):
            res.fail(f"{_describe(game)} C={format_coalition(c)}: profile {_profile(profile)} {cls}")
    return res


@_timed
def redistribution(rng: random.Random, count: int) -> SuiteResult:
    """Coalition redistribution keeps coalition sums and leaves no C-inefficient NE."""
    res = SuiteResult("redistribution")
    strict = 0
    while res.cases < count:
        n, m = rng.choice((3, 5)), rng.choice((1, 2))
        agg = Majority() if rng.random() < 0.6 else random_monotone_family(rng, n)
        s = BAStructure(n, m)
        winning = sorted(core.winning_coalitions(agg, s), key=sorted)
        if not winning:
            continue
        c = rng.choice(winning)
        game = consistent_game(rng, n, m, agg, c)
        b_star = cubes_consistent([game.cubes[i] for i in c], m)
        moved = redistribute_for_coalition(game, c, b_star)
        res.cases += 1
        members = sorted(c)
        before = game.scaled_payoffs
        after = moved.scaled_payoffs
        scale_b, scale_a = game.scale, moved.scale
        res.checks += 1
        for p in range(s.n_profiles):
            if sum(int(before[i, p]) for i in members) * scale_a != sum(int(after[i, p]) for i in members) * scale_b:
                res.fail(f"{_describe(game)} C={format_coalition(c)}: coalition sum changes at {_profile(s.profile(p))}")
                break
        for prof in enumerate_nash(moved):
            res.checks += 1
            if not is_efficient(moved, prof, c):
                totally = all(not moved.goal_met(i, prof) for i in c)
                strict += totally
                res.fail(
                    f"{_describe(game)} C={format_coalition(c)} B*={''.join(map(str, b_star))}: "
                    f"NE {_profile(prof)} is C-inefficient"
                    + (" (totally)" if totally else " (not totally)")
                )
    if res.failures:
        res.notes.append(f"{strict} of {len(res.failures)} failures are totally C-inefficient")
    return res


def n_consistent_game(rng: random.Random) -> AggregationGame:
    n, m = rng.choice(((3, 1), (3, 2), (3, 2), (3, 3), (5, 1), (5, 2)))
    return consistent_game(rng, n, m, Majority(), range(n))


@_timed
def commitment(rng: random.Random, count: int) -> SuiteResult:
    """N-consistent majority games: each N-efficient NE is certified via commitments."""
    res = SuiteResult("commitment")
    untruthful = 0
    for _ in range(count):
        game = n_consistent_game(rng)
        res.cases += 1
        everyone = game.structure.everyone
        for prof in enumerate_nash(game):
            if not is_efficient(game, prof, everyone):
                continue
            res.checks += 1
            chk = verify_commitment(game, prof, commitment_transfer(game, prof))
            status = check_surviving(game, prof)
            if not (chk.ok and isinstance(status, Certified)):
                truthful = all(is_truthful(game, i, prof[i]) for i in range(game.n))
                untruthful += not truthful
                res.fail(
                    f"{_describe(game)}: NE {_profile(prof)} "
                    f"{'truthful' if truthful else 'not truthful'}: {status.label}; "
                    + "; ".join(chk.diagnostics[:2])
                )
    if res.failures:
        res.notes.append(f"{untruthful} of {len(res.failures)} failures have a non-truthful ballot")
    return res


@_timed
def deviation(rng: random.Random, count: int) -> SuiteResult:
    """Same games: every NE that misses a consistent winning coalition's goals is refuted."""
    res = SuiteResult("deviation")
    for _ in range(count):
        game = n_consistent_game(rng)
        res.cases += 1
        s = game.structure
        wins = [
            c for c in core.winning_coalitions(game.aggregator, s)
            if cubes_consistent([game.cubes[i] for i in c], s.m) is not None
        ]
        for prof in enumerate_nash(game):
            missed = [c for c in wins if not is_efficient(game, prof, c)]
            if not missed:
                continue
            res.checks += 1
            status = check_surviving(game, prof)
            if not (isinstance(status, Refuted) and status.check.isolated and status.check.profitable):
                detail = status.route if isinstance(status, Refuted) else status.label
                res.fail(f"{_describe(game)}: NE {_profile(prof)} misses {format_coalition(missed[0])}: {detail}")
    return res


SUITES = {
    "truthful-dominance": lambda rng, k: truthful_dominance(rng, k),
    "truthful-dominance-family": lambda rng, k: truthful_dominance(rng, k, family=True),
    "resilient-existence": resilient_existence,
    "redistribution": redistribution,
    "commitment": commitment,
    "deviation": deviation,
}

DEFAULT_COUNTS = {
    "truthful-dominance": 200,
    "truthful-dominance-family": 200,
    "resilient-existence": 100,
    "redistribution": 100,
    "commitment": 50,
    "deviation": 50,
}


def run_suites(
    seed: int = 0, counts: dict[str, int] | None = None, names: Iterable[str] | None = None
) -> list[SuiteResult]:
    """Run the named suites (all by default), each with its own generator derived from ``seed``."""
    counts = {**DEFAULT_COUNTS, **(counts or {})}
    wanted = set(SUITES if names is None else names)
    out = []
    for name, fn in SUITES.items():
        if name not in wanted:
            continue
        rng = random.Random(f"{seed}:{name}")
        res = fn(rng, counts[name])
        res.name = name
        out.append(res)
    return out

"""Pre-vote transfers and the equilibria that survive them.

A transfer profile says how much each payer hands to each payee if a given
ballot profile is played. Applying it changes every payoff by incoming minus
outgoing amounts, which keeps the total payoff at every profile unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import core, kernels
from .core import BAStructure, Ballot, Coalition, Profile, format_coalition
from .game import (
    AggregationGame,
    Full,
    _compact,
    dominance_violation,
    dominant_strategy_equilibrium,
    enumerate_nash,
    iesds,
    is_efficient,
    is_nash,
    is_uniform,
    nash_mask,
    outcome_payoffs,
    weakly_dominant_ballots,
)
from .logic import Formula, cubes_consistent, entails, satisfies


class PreconditionError(ValueError):
    """An analysis was asked for outside the assumptions it relies on."""

    def __init__(self, name: str, detail: str = ""):
        super().__init__(f"precondition violated: {name}" + (f" ({detail})" if detail else ""))
        self.name = name


# -- transfer profiles -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransferProfile:
    """Sparse nonnegative transfers ``amount = num / den`` per entry.

    Entries are kept sorted by (payer, profile, payee); zero amounts are
    dropped and self-transfers are rejected.
    """

    payer: np.ndarray
    profile: np.ndarray
    payee: np.ndarray
    num: np.ndarray
    den: int = 1

    def __post_init__(self):
        payer = np.asarray(self.payer, dtype=np.int64).reshape(-1)
        profile = np.asarray(self.profile, dtype=np.int64).reshape(-1)
        payee = np.asarray(self.payee, dtype=np.int64).reshape(-1)
        num = np.asarray(self.num)
        if num.dtype != object:
            num = num.astype(np.int64)
        num = num.reshape(-1)
        if not (len(payer) == len(profile) == len(payee) == len(num)):
            raise ValueError("transfer arrays differ in length")
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        if np.any(num < 0):
            raise ValueError("transfers must be nonnegative")
        if np.any(payer == payee):
            raise ValueError("self-transfers are not allowed")
        if len(num) and min(payer.min(), profile.min(), payee.min()) < 0:
            raise ValueError("negative voter or profile index")
        if num.dtype == object:
            num = _compact(num)
        keep = num != 0
        payer, profile, payee, num = payer[keep], profile[keep], payee[keep], num[keep]
        if len(num):
            width = int(payee.max()) + 1
            key = (payer * (int(profile.max()) + 1) + profile) * width + payee
            if not np.all(key[1:] > key[:-1]):
                order = np.argsort(key, kind="stable")
                payer, profile, payee, num, key = (
                    payer[order], profile[order], payee[order], num[order], key[order]
                )
                if np.any(key[1:] == key[:-1]):
                    raise ValueError("duplicate transfer entry")
        den = self.den
        if len(num):
            if num.dtype == object:
                g = math.gcd(den, *{int(x) for x in num})
            else:
                g = math.gcd(den, int(np.gcd.reduce(num)))
            if g > 1:
                num = num // g
                den //= g
        else:
            den = 1
        for name, val in (("payer", payer), ("profile", profile), ("payee", payee), ("num", num), ("den", den)):
            object.__setattr__(self, name, val)

    @classmethod
    def void(cls) -> "TransferProfile":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0))

    @classmethod
    def from_entries(cls, entries: Union[Mapping, Iterable]) -> "TransferProfile":
        """Build from ``{(payer, profile_index, payee): amount}`` or 4-tuples."""
        if isinstance(entries, Mapping):
            entries = [(a, p, b, v) for (a, p, b), v in entries.items()]
        entries = [(int(a), int(p), int(b), Fraction(v)) for a, p, b, v in entries]
        den = math.lcm(1, *(v.denominator for *_, v in entries))
        return cls(
            [e[0] for e in entries], [e[1] for e in entries], [e[2] for e in entries],
            np.array([int(e[3] * den) for e in entries], dtype=object), den,
        )

    def __len__(self) -> int:
        return len(self.num)

    def __eq__(self, other):
        if not isinstance(other, TransferProfile) or len(self) != len(other):
            return False
        return (
            self.den == other.den
            and np.array_equal(self.payer, other.payer)
            and np.array_equal(self.profile, other.profile)
            and np.array_equal(self.payee, other.payee)
            and all(int(a) == int(b) for a, b in zip(self.num, other.num))
        )

    __hash__ = None

    def entries(self) -> Iterable[tuple[int, int, int, Fraction]]:
        for a, p, b, x in zip(self.payer, self.profile, self.payee, self.num):
            yield int(a), int(p), int(b), Fraction(int(x), self.den)

    def amount(self, payer: int, profile: int, payee: int) -> Fraction:
        hit = (self.payer == payer) & (self.profile == profile) & (self.payee == payee)
        idx = np.flatnonzero(hit)
        return Fraction(int(self.num[idx[0]]), self.den) if idx.size else Fraction(0)

    def without_payer(self, payer: int) -> "TransferProfile":
        keep = self.payer != payer
        return TransferProfile(self.payer[keep], self.profile[keep], self.payee[keep], self.num[keep], self.den)

    def only_payer(self, payer: int) -> "TransferProfile":
        keep = self.payer == payer
        return TransferProfile(self.payer[keep], self.profile[keep], self.payee[keep], self.num[keep], self.den)

    def merge(self, other: "TransferProfile") -> "TransferProfile":
        """Both transfers together; amounts on a shared entry add up."""
        den = math.lcm(self.den, other.den)
        num = np.concatenate([
            self.num.astype(object) * (den // self.den), other.num.astype(object) * (den // other.den)
        ])
        payer = np.concatenate([self.payer, other.payer]).astype(np.int64)
        profile = np.concatenate([self.profile, other.profile]).astype(np.int64)
        payee = np.concatenate([self.payee, other.payee]).astype(np.int64)
        if len(self) and len(other):
            width = int(payee.max()) + 1
            key = (payer * (int(profile.max()) + 1) + profile) * width + payee
            keys, first, inverse = np.unique(key, return_index=True, return_inverse=True)
            if len(keys) < len(key):
                summed = np.zeros(len(keys), dtype=object)
                np.add.at(summed, inverse, num)
                payer, profile, payee, num = payer[first], profile[first], payee[first], summed
        return TransferProfile(payer, profile, payee, num, den)

    def lines(self, structure: BAStructure) -> list[str]:
        """One ``payer profile payee amount`` record per entry, 1-based voters."""
        width = structure.n * structure.m
        return [
            f"{a + 1} {p:0{width}b} {b + 1} {_fmt(v)}" for a, p, b, v in self.entries()
        ]

    @classmethod
    def parse(cls, lines: Iterable[str], structure: BAStructure) -> "TransferProfile":
        entries = []
        for k, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {k}: expected 'payer profile payee amount'")
            a, prof, b, v = parts
            if len(prof) != structure.n * structure.m or set(prof) - {"0", "1"}:
                raise ValueError(f"line {k}: bad profile {prof!r}")
            entries.append((int(a) - 1, int(prof, 2), int(b) - 1, Fraction(v)))
        return cls.from_entries(entries)


def _fmt(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def transfer_delta(tau: TransferProfile, structure: BAStructure) -> np.ndarray:
    """``(n, profiles)`` payoff change times ``tau.den`` (incoming - outgoing)."""
    n, total = structure.n, structure.n_profiles
    if len(tau) and (
        tau.payer.max() >= n or tau.payee.max() >= n or tau.profile.max() >= total
    ):
        raise core.DimensionError("transfer entries outside the structure")
    num = tau.num
    # each cell collects at most n - 1 entries in and out
    small = num.dtype != object and (not len(num) or int(num.max()) * n < kernels.INT64_SAFE)
    if not small:
        num = num.astype(object)
    delta = np.zeros((n, total), dtype=np.int64 if small else object)
    np.add.at(delta, (tau.payee, tau.profile), num)
    np.subtract.at(delta, (tau.payer, tau.profile), num)
    return delta


def apply_transfers(game: AggregationGame, tau: TransferProfile) -> AggregationGame:
    """Game whose payoffs are updated by ``tau`` (incoming minus outgoing)."""
    delta = transfer_delta(tau, game.structure)
    table = game.payoffs
    if isinstance(table, Full):
        den = math.lcm(table.denominator, tau.den)
        total = table.delta.astype(object) * (den // table.denominator) + delta * (den // tau.den)
        base = table.base
    else:
        den, total, base = tau.den, delta, table
    return game.replace_payoffs(Full(base, _compact(total), den))


# -- endogenous games ------------------------------------------------------


@dataclass(frozen=True)
class EndogenousGame:
    base: AggregationGame

    def __post_init__(self):
        if not is_uniform(self.base):
            raise PreconditionError("uniform", "endogenous games start from a uniform game")


def payoff_bound_M(game: AggregationGame) -> Fraction:
    """One plus the largest payoff gap any voter has between two outcomes."""
    if not is_uniform(game):
        raise PreconditionError("uniform", "payoff bound needs outcome-based payoffs")
    gaps = [max(row.values()) - min(row.values()) for row in outcome_payoffs(game)]
    return 1 + max(gaps)


def _require_systematic_monotonic(game: AggregationGame) -> None:
    if not core.is_systematic_monotonic(game.aggregator, game.structure, game.cap):
        raise PreconditionError("systematic and monotonic aggregator")


def _require_cubes(game: AggregationGame) -> None:
    if not game.all_cubes:
        bad = [i + 1 for i, c in enumerate(game.cubes) if c is None]
        raise PreconditionError("cube goals", f"voters {bad} have non-cube goals")


def coalition_witness(game: AggregationGame, coalition: Iterable[int]) -> Ballot | None:
    _require_cubes(game)
    return cubes_consistent([game.cubes[i] for i in coalition], game.m)


def redistribute_for_coalition(
    game: AggregationGame, coalition: Iterable[int], b_star: Sequence[int]
) -> AggregationGame:
    """Move payoff inside ``coalition`` so its members prefer voting ``b_star``.

    Every member except the sponsor (lowest index) earns ``M`` extra whenever
    they vote ``b_star``; the sponsor pays for all of it. The coalition's
    total payoff is unchanged at every profile.
    """
    c = sorted(set(coalition))
    s = game.structure
    b_star = tuple(b_star)
    if not c:
        raise PreconditionError("nonempty coalition")
    if not is_uniform(game):
        raise PreconditionError("uniform")
    _require_cubes(game)
    _require_systematic_monotonic(game)
    if not all(satisfies(b_star, game.goals[i]) for i in c):
        raise PreconditionError("coalition-consistent", "b_star violates a member's goal")
    if frozenset(c) not in core.winning_coalitions(game.aggregator, s, game.cap):
        raise PreconditionError("winning coalition", format_coalition(c))
    bonus = payoff_bound_M(game)
    delta = np.zeros((s.n, s.n_profiles), dtype=object)
    profiles = np.arange(s.n_profiles, dtype=np.int64)
    target = s.ballot_index(b_star)
    sponsor, rest = c[0], c[1:]
    for j in rest:
        hit = ((profiles >> ((s.n - 1 - j) * s.m)) & (s.n_ballots - 1)) == target
        delta[j, hit] += bonus.numerator
        delta[sponsor, hit] -= bonus.numerator
    if isinstance(game.payoffs, Full):
        raise PreconditionError("uniform table", "redistribution starts from outcome payoffs")
    return game.replace_payoffs(Full(game.payoffs, _compact(delta), bonus.denominator))


# -- commitment (sustaining an efficient equilibrium) -----------------------


def commitment_transfer(game: AggregationGame, profile: Profile) -> TransferProfile:
    """Each voter promises ``2M`` to every other voter if they leave their ballot."""
    s = game.structure
    s.check_profile(profile)
    amount = 2 * payoff_bound_M(game)
    profiles = np.arange(s.n_profiles, dtype=np.int64)
    payers, profs, payees = [], [], []
    for i in range(s.n):
        mine = (profiles >> ((s.n - 1 - i) * s.m)) & (s.n_ballots - 1)
        moved = profiles[mine != s.ballot_index(profile[i])]
        for j in range(s.n):
            if j != i:
                payers.append(np.full(moved.size, i))
                profs.append(moved)
                payees.append(np.full(moved.size, j))
    if not payers:
        return TransferProfile.void()
    count = sum(len(x) for x in payers)
    num = np.full(count, amount.numerator, dtype=np.int64)
    return TransferProfile(
        np.concatenate(payers), np.concatenate(profs), np.concatenate(payees), num, amount.denominator
    )


@dataclass(frozen=True)
class CommitmentCheck:
    dominant: tuple[bool, ...]  # profile ballot weakly dominant, per voter
    unique: bool
    outcome_matches: bool
    diagnostics: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return all(self.dominant) and self.unique and self.outcome_matches


def verify_commitment(game: AggregationGame, profile: Profile, tau: TransferProfile) -> CommitmentCheck:
    """Check that ``profile`` is the unique dominant-strategy equilibrium after ``tau``."""
    s = game.structure
    profile = tuple(tuple(b) for b in profile)
    moved = apply_transfers(game, tau)
    dominant, notes = [], []
    for i in range(s.n):
        bad = dominance_violation(moved, i, profile[i])
        dominant.append(bad is None)
        if bad is not None:
            ctx, better = bad
            notes.append(
                f"voter {i + 1}: ballot {core.bits(profile[i])} beaten by "
                f"{core.bits(better)} at profile {_profile_bits(ctx)}"
            )
    eq = dominant_strategy_equilibrium(moved)
    unique = eq is not None and all(
        profile[i] in weakly_dominant_ballots(moved, i) for i in range(s.n)
    )
    if eq is None:
        notes.append("no dominant-strategy equilibrium in the unique sense")
    matches = eq is not None and moved.outcome(eq) == core.aggregate(game.aggregator, profile, s)
    return CommitmentCheck(tuple(dominant), unique, matches, tuple(notes))


def _profile_bits(profile: Profile) -> str:
    return " ".join(core.bits(b) for b in profile)


# -- deviation (removing an inefficient equilibrium) ------------------------


def deviation_transfer(
    game: AggregationGame, deviator: int, b_prime: Sequence[int], tau_star: TransferProfile
) -> TransferProfile:
    """Replace the deviator's transfers by a bonus to everyone voting ``b_prime``.

    Voter ``j`` gets a fixed amount whenever they vote ``b_prime``, one more
    than the largest gain they could get from any other ballot in any context
    under the remaining transfers.
    """
    s = game.structure
    k = s.n_ballots
    target = s.ballot_index(b_prime)
    others = tau_star.without_payer(deviator)
    rest = apply_transfers(game, others)
    pay = rest.scaled_payoffs
    scale = rest.scale
    profiles = np.arange(s.n_profiles, dtype=np.int64)
    payers, profs, payees, amounts = [], [], [], []
    for j in range(s.n):
        if j == deviator:
            continue
        view = np.moveaxis(pay[j].reshape((k,) * s.n), j, 0).reshape(k, -1)
        gain = max(0, max(
            int((view[b] - view[target]).max()) for b in range(k) if b != target
        ))
        offer = Fraction(gain, scale) + 1
        hit = profiles[((profiles >> ((s.n - 1 - j) * s.m)) & (k - 1)) == target]
        payers.append(np.full(hit.size, deviator))
        profs.append(hit)
        payees.append(np.full(hit.size, j))
        amounts.append((offer, hit.size))
    den = math.lcm(1, *(a.denominator for a, _ in amounts))
    num = np.concatenate([np.full(c, int(a * den), dtype=object) for a, c in amounts])
    offer_tau = TransferProfile(
        np.concatenate(payers), np.concatenate(profs), np.concatenate(payees), num, den
    )
    return others.merge(offer_tau)


@dataclass(frozen=True)
class DeviationCheck:
    isolated: bool  # every non-deviator is left with the target ballot only
    equilibria: int  # pure NE of the transferred game
    goal_everywhere: bool  # the deviator's goal holds in all of them

    @property
    def profitable(self) -> bool:
        return self.equilibria > 0 and self.goal_everywhere


def verify_deviation(
    game: AggregationGame, deviator: int, b_prime: Sequence[int], tau: TransferProfile
) -> DeviationCheck:
    moved = apply_transfers(game, tau)
    survivors = iesds(moved)
    target = tuple(b_prime)
    isolated = all(survivors[j] == frozenset({target}) for j in range(game.n) if j != deviator)
    mask = nash_mask(moved)
    hits = np.flatnonzero(mask)
    met = game.sat[deviator][game.outcomes[hits]]
    return DeviationCheck(isolated, int(hits.size), bool(np.all(met)))


# -- survival --------------------------------------------------------------


@dataclass(frozen=True)
class Certified:
    witness: TransferProfile
    check: CommitmentCheck
    label = "CERTIFIED"


@dataclass(frozen=True)
class Refuted:
    deviator: int
    witness: TransferProfile
    coalition: Coalition
    target: Ballot
    check: DeviationCheck
    label = "REFUTED"

    @property
    def route(self) -> str:
        return "iesds" if self.check.isolated else "equilibria"


@dataclass(frozen=True)
class Unknown:
    reason: str
    label = "UNKNOWN"


SurvivalStatus = Union[Certified, Refuted, Unknown]


def check_preconditions(game: AggregationGame) -> None:
    if not is_uniform(game):
        raise PreconditionError("uniform")
    _require_cubes(game)
    _require_systematic_monotonic(game)


def refutation_candidates(game: AggregationGame, profile: Profile) -> list[tuple[Coalition, int, Ballot]]:
    """(coalition, deviator, target) triples, biggest coalitions first."""
    s = game.structure
    p = game.index(profile)
    wins = core.winning_coalitions(game.aggregator, s, game.cap)
    out, seen = [], set()
    for c in sorted(wins, key=lambda c: (-len(c), sorted(c))):
        unmet = [i for i in sorted(c) if not game.goal_met(i, p)]
        if not unmet:
            continue
        witness = coalition_witness(game, c)
        if witness is None:
            continue
        key = (unmet[0], witness)
        if key in seen:
            continue
        seen.add(key)
        out.append((c, unmet[0], witness))
    return out


def check_surviving(endo: Union[EndogenousGame, AggregationGame], profile: Profile) -> SurvivalStatus:
    game = endo.base if isinstance(endo, EndogenousGame) else EndogenousGame(endo).base
    profile = tuple(tuple(b) for b in profile)
    check_preconditions(game)
    if not is_nash(game, profile):
        raise PreconditionError("Nash equilibrium", f"profile {_profile_bits(profile)} is not a NE")
    candidates = refutation_candidates(game, profile)
    if candidates:
        anchor = commitment_transfer(game, profile)
        fallback = None
        for c, i, target in candidates:
            tau = deviation_transfer(game, i, target, anchor)
            chk = verify_deviation(game, i, target, tau)
            if chk.isolated and chk.profitable:
                return Refuted(i, tau, c, target, chk)
            if chk.profitable and fallback is None:
                fallback = Refuted(i, tau, c, target, chk)
        if fallback is not None:
            return fallback
        tried = ", ".join(f"{format_coalition(c)}/voter {i + 1}" for c, i, _ in candidates)
        return Unknown(f"no deviation witness makes the deviation profitable (tried {tried})")
    everyone = game.structure.everyone
    if coalition_witness(game, everyone) is not None and is_efficient(game, profile, everyone):
        tau = commitment_transfer(game, profile)
        chk = verify_commitment(game, profile, tau)
        if chk.ok:
            return Certified(tau, chk)
        return Unknown("commitment witness fails: " + "; ".join(chk.diagnostics))
    return Unknown("no consistent winning coalition is violated and the game is not N-consistent")


# -- integrity constraints -------------------------------------------------


@dataclass(frozen=True)
class ParadoxRow:
    profile: Profile
    outcome: Ballot
    outcome_admissible: bool
    ballots_admissible: tuple[bool, ...]
    status: SurvivalStatus | None

    @property
    def paradox(self) -> bool:
        return all(self.ballots_admissible) and not self.outcome_admissible


@dataclass(frozen=True)
class ParadoxReport:
    rows: tuple[ParadoxRow, ...]
    responsible: Coalition
    n_consistent: bool
    guarantee: bool  # every surviving equilibrium is constraint-consistent
    status_error: str | None = None


def responsible_players(game: AggregationGame, ic: Formula) -> Coalition:
    return frozenset(i for i in range(game.n) if entails(game.goals[i], ic, game.m))


def paradox_analysis(game: AggregationGame, ic: Formula) -> ParadoxReport:
    responsible = responsible_players(game, ic)
    n_consistent = game.all_cubes and coalition_witness(game, game.structure.everyone) is not None
    error = None
    try:
        check_preconditions(game)
    except PreconditionError as exc:
        error = str(exc)
    rows = []
    for prof in enumerate_nash(game):
        out = game.outcome(prof)
        status = None if error else check_surviving(game, prof)
        rows.append(ParadoxRow(
            prof, out, satisfies(out, ic), tuple(satisfies(b, ic) for b in prof), status
        ))
    return ParadoxReport(
        tuple(rows), responsible, n_consistent, n_consistent and bool(responsible), error
    )

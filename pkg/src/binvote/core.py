"""Binary aggregation structures, ballots, profiles and aggregation rules.

Ballots are tuples of 0/1 of length ``m``; profiles are tuples of ``n``
ballots. Voters and issues are 0-based here; file formats and reports use
1-based numbers. Coalitions are ``frozenset`` of voter indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from . import kernels

Ballot = tuple[int, ...]
Profile = tuple[Ballot, ...]
Coalition = frozenset

DEFAULT_CAP = 20  # max n*m for exhaustive profile enumeration


class DimensionError(ValueError):
    pass


class NotSystematicError(ValueError):
    """Raised with a witness: two (profile, issue) pairs with equal acceptor sets."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class CapExceededError(ValueError):
    pass


@dataclass(frozen=True)
class BAStructure:
    n: int
    m: int
    issue_names: tuple[str, ...] | None = None
    voter_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"voter count must be odd and >= 3, got {self.n}")
        if self.m < 1:
            raise ValueError(f"issue count must be >= 1, got {self.m}")
        if self.issue_names is not None and len(self.issue_names) != self.m:
            raise ValueError("one name per issue required")
        if self.voter_names is not None and len(self.voter_names) != self.n:
            raise ValueError("one name per voter required")

    @property
    def n_ballots(self) -> int:
        return 1 << self.m

    @property
    def n_profiles(self) -> int:
        return 1 << (self.n * self.m)

    @property
    def voters(self) -> range:
        return range(self.n)

    @property
    def everyone(self) -> Coalition:
        return frozenset(range(self.n))

    def check_cap(self, cap: int = DEFAULT_CAP) -> None:
        if self.n * self.m > cap:
            raise CapExceededError(
                f"profile space 2^{self.n * self.m} exceeds the enumeration cap 2^{cap}"
            )

    def voter_label(self, i: int) -> str:
        return self.voter_names[i] if self.voter_names else str(i + 1)

    # -- encodings ---------------------------------------------------------

    def ballot_index(self, ballot: Sequence[int]) -> int:
        if len(ballot) != self.m:
            raise DimensionError(f"ballot of length {len(ballot)}, expected {self.m}")
        return ballot_to_int(ballot)

    def ballot(self, index: int) -> Ballot:
        return int_to_ballot(index, self.m)

    def profile_index(self, profile: Sequence[Sequence[int]]) -> int:
        self.check_profile(profile)
        out = 0
        for b in profile:
            out = (out << self.m) | ballot_to_int(b)
        return out

    def profile(self, index: int) -> Profile:
        k = self.n_ballots - 1
        return tuple(
            int_to_ballot((index >> ((self.n - 1 - i) * self.m)) & k, self.m)
            for i in range(self.n)
        )

    def check_profile(self, profile: Sequence[Sequence[int]]) -> None:
        if len(profile) != self.n:
            raise DimensionError(f"profile has {len(profile)} ballots, expected {self.n}")
        for b in profile:
            if len(b) != self.m or any(x not in (0, 1) for x in b):
                raise DimensionError(f"invalid ballot {tuple(b)} for m={self.m}")


def ballot_to_int(ballot: Sequence[int]) -> int:
    out = 0
    for x in ballot:
        out = (out << 1) | int(x)
    return out


def int_to_ballot(index: int, m: int) -> Ballot:
    return tuple((index >> (m - 1 - j)) & 1 for j in range(m))


def inverse_ballot(ballot: Sequence[int]) -> Ballot:
    return tuple(1 - x for x in ballot)


def replace_ballot(profile: Profile, i: int, ballot: Ballot) -> Profile:
    return profile[:i] + (tuple(ballot),) + profile[i + 1:]


def bits(ballot: Sequence[int]) -> str:
    return "".join(str(x) for x in ballot)


def coalition_mask(coalition: Iterable[int]) -> int:
    out = 0
    for i in coalition:
        out |= 1 << i
    return out


def mask_coalition(mask: int, n: int) -> Coalition:
    return frozenset(i for i in range(n) if mask >> i & 1)


def all_coalitions(n: int) -> list[Coalition]:
    """Every subset of voters, ordered by size then lexicographically."""
    return [
        frozenset(c) for size in range(n + 1) for c in itertools.combinations(range(n), size)
    ]


def format_coalition(c: Iterable[int]) -> str:
    return "{" + ",".join(str(i + 1) for i in sorted(c)) + "}"


# -- aggregators -----------------------------------------------------------


@dataclass(frozen=True)
class Majority:
    pass


@dataclass(frozen=True)
class Quota:
    thresholds: tuple[int, ...]


@dataclass(frozen=True)
class ExplicitFamily:
    """Accept an issue iff its acceptor set belongs to ``family``."""

    family: frozenset = field(default_factory=frozenset)

    @classmethod
    def of(cls, coalitions: Iterable[Iterable[int]]) -> "ExplicitFamily":
        return cls(frozenset(frozenset(c) for c in coalitions))


@dataclass(frozen=True, eq=False)
class GeneralTable:
    """Arbitrary rule given extensionally; for exercising the axiom checkers."""

    outcomes: tuple[int, ...]  # outcome ballot index per profile index

    @classmethod
    def from_function(cls, structure: BAStructure, fn: Callable[[Profile], Sequence[int]]):
        return cls(tuple(
            ballot_to_int(fn(structure.profile(p))) for p in range(structure.n_profiles)
        ))

    def __eq__(self, other):
        return isinstance(other, GeneralTable) and self.outcomes == other.outcomes

    def __hash__(self):
        return hash(self.outcomes)


Aggregator = Union[Majority, Quota, ExplicitFamily, GeneralTable]


def majority_threshold(n: int) -> int:
    return (n + 1) // 2


def validate(agg: Aggregator, structure: BAStructure) -> None:
    n, m = structure.n, structure.m
    if isinstance(agg, Quota):
        if len(agg.thresholds) != m:
            raise DimensionError(f"{len(agg.thresholds)} quotas for {m} issues")
        if any(not 1 <= q <= n for q in agg.thresholds):
            raise ValueError(f"quotas must lie in [1, {n}]")
    elif isinstance(agg, ExplicitFamily):
        for c in agg.family:
            if any(not 0 <= i < n for i in c):
                raise DimensionError(f"coalition {format_coalition(c)} mentions unknown voters")
        witness = monotonicity_witness(agg.family, n)
        if witness is not None:
            raise ValueError(
                f"family not monotonic: {format_coalition(witness[0])} in, "
                f"{format_coalition(witness[1])} out"
            )
    elif isinstance(agg, GeneralTable):
        if len(agg.outcomes) != structure.n_profiles:
            raise DimensionError("table does not cover every profile")


def acceptance_table(agg: Aggregator, structure: BAStructure) -> np.ndarray:
    """``(m, 2**n)`` table: does issue ``j`` pass when acceptors are ``mask``."""
    n, m = structure.n, structure.m
    sizes = np.array([bin(mask).count("1") for mask in range(1 << n)])
    if isinstance(agg, Majority):
        row = sizes >= majority_threshold(n)
        return np.tile(row, (m, 1))
    if isinstance(agg, Quota):
        return np.stack([sizes >= q for q in agg.thresholds])
    if isinstance(agg, ExplicitFamily):
        row = np.zeros(1 << n, dtype=bool)
        for c in agg.family:
            row[coalition_mask(c)] = True
        return np.tile(row, (m, 1))
    raise TypeError(f"{type(agg).__name__} has no acceptance table")


def outcome_table(agg: Aggregator, structure: BAStructure, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Outcome ballot index for every profile index."""
    validate(agg, structure)
    if isinstance(agg, GeneralTable):
        return np.asarray(agg.outcomes, dtype=np.int64)
    structure.check_cap(cap)
    return kernels.outcome_table(structure.n, structure.m, acceptance_table(agg, structure))


def acceptor_set(profile: Sequence[Sequence[int]], issue: int) -> Coalition:
    if not profile or not 0 <= issue < len(profile[0]):
        raise IndexError(f"issue {issue + 1} out of range")
    return frozenset(i for i, b in enumerate(profile) if b[issue] == 1)


def aggregate(agg: Aggregator, profile: Sequence[Sequence[int]], structure: BAStructure | None = None) -> Ballot:
    if structure is None:
        structure = BAStructure(len(profile), len(profile[0]))
    structure.check_profile(profile)
    validate(agg, structure)
    n, m = structure.n, structure.m
    if isinstance(agg, GeneralTable):
        return structure.ballot(agg.outcomes[structure.profile_index(profile)])
    out = []
    for j in range(m):
        acc = acceptor_set(profile, j)
        if isinstance(agg, Majority):
            out.append(int(len(acc) >= majority_threshold(n)))
        elif isinstance(agg, Quota):
            out.append(int(len(acc) >= agg.thresholds[j]))
        else:
            out.append(int(acc in agg.family))
    return tuple(out)


# -- axioms ----------------------------------------------------------------


def monotonicity_witness(family: Iterable[Iterable[int]], n: int):
    """First ``(C, C')`` with ``C`` in the family, ``C' = C + {i}`` outside it."""
    fam = {frozenset(c) for c in family}
    for c in sorted(fam, key=lambda c: (len(c), sorted(c))):
        for i in range(n):
            if i not in c and c | {i} not in fam:
                return c, c | {i}
    return None


def is_monotonic(family: Iterable[Iterable[int]], n: int) -> bool:
    """Superset closure, checked on one-element extensions (equivalent)."""
    return monotonicity_witness(family, n) is None


@dataclass(frozen=True)
class SystematicityReport:
    systematic: bool
    family: frozenset | None  # acceptance family when systematic
    issue_families: tuple[frozenset, ...]  # per-issue acceptance families seen
    witness: tuple | None  # ((profile, issue), (profile, issue)) on failure


def systematicity(agg: Aggregator, structure: BAStructure, cap: int = DEFAULT_CAP) -> SystematicityReport:
    """Decide by enumeration whether one acceptance family drives every issue."""
    n, m = structure.n, structure.m
    structure.check_cap(cap)
    outcomes = outcome_table(agg, structure, cap)
    seen: dict[int, tuple[int, int, int]] = {}  # acceptor mask -> (value, profile, issue)
    per_issue: list[dict[int, int]] = [{} for _ in range(m)]
    witness = None
    p = np.arange(structure.n_profiles, dtype=np.int64)
    for j in range(m):
        acc = np.zeros_like(p)
        for i in range(n):
            acc |= ((p >> ((n - 1 - i) * m + (m - 1 - j))) & 1) << i
        val = (outcomes >> (m - 1 - j)) & 1
        keys, first = np.unique(acc * 2 + val, return_index=True)
        for key, idx in zip(keys.tolist(), first.tolist()):
            mask, v = divmod(key, 2)
            per_issue[j].setdefault(mask, v)
            prev = seen.get(mask)
            if prev is None:
                seen[mask] = (v, idx, j)
            elif prev[0] != v:
                cand = tuple(sorted(((prev[1], prev[2]), (idx, j))))
                if witness is None or cand < witness:
                    witness = cand
    issue_families = tuple(
        frozenset(mask_coalition(mask, n) for mask, v in fams.items() if v)
        for fams in per_issue
    )
    if witness is not None:
        (p1, j1), (p2, j2) = witness
        return SystematicityReport(
            False, None, issue_families,
            ((structure.profile(p1), j1), (structure.profile(p2), j2)),
        )
    family = frozenset(mask_coalition(mask, n) for mask, (v, _, _) in seen.items() if v)
    return SystematicityReport(True, family, issue_families, None)


def is_systematic(agg: Aggregator, structure: BAStructure, cap: int = DEFAULT_CAP) -> bool:
    return systematicity(agg, structure, cap).systematic


def acceptance_family(agg: Aggregator, structure: BAStructure, cap: int = DEFAULT_CAP) -> frozenset:
    """The family W with ``F(B)(j) = 1`` iff the acceptors of ``j`` are in W."""
    n = structure.n
    if isinstance(agg, Majority):
        return frozenset(c for c in all_coalitions(n) if len(c) >= majority_threshold(n))
    if isinstance(agg, Quota) and len(set(agg.thresholds)) == 1:
        validate(agg, structure)
        return frozenset(c for c in all_coalitions(n) if len(c) >= agg.thresholds[0])
    if isinstance(agg, ExplicitFamily):
        validate(agg, structure)
        return agg.family
    report = systematicity(agg, structure, cap)
    if not report.systematic:
        raise NotSystematicError(
            f"{type(agg).__name__} is not systematic", report.witness
        )
    return report.family


def winning_coalitions(agg: Aggregator, structure: BAStructure, cap: int = DEFAULT_CAP) -> frozenset:
    """Coalitions whose unanimous stance on an issue fixes the outcome.

    For a systematic rule with acceptance family W, C forces acceptance iff
    C is in W and forces rejection iff its complement is not.
    """
    fam = acceptance_family(agg, structure, cap)
    everyone = structure.everyone
    return frozenset(c for c in fam if (everyone - c) not in fam)


def resilient_winning_coalitions(agg: Aggregator, structure: BAStructure, cap: int = DEFAULT_CAP) -> frozenset:
    wins = winning_coalitions(agg, structure, cap)
    return frozenset(c for c in wins if all(c - {i} in wins for i in c))


def is_winning_by_enumeration(agg: Aggregator, structure: BAStructure, coalition: Coalition, cap: int = DEFAULT_CAP) -> bool:
    """The defining property checked directly on every profile."""
    n, m = structure.n, structure.m
    outcomes = outcome_table(agg, structure, cap)
    cmask = coalition_mask(coalition)
    for p in range(structure.n_profiles):
        prof = structure.profile(p)
        for j in range(m):
            acc = coalition_mask(acceptor_set(prof, j))
            rej = ((1 << n) - 1) ^ acc
            val = (int(outcomes[p]) >> (m - 1 - j)) & 1
            if acc == cmask and val != 1:
                return False
            if rej == cmask and val != 0:
                return False
    return True


def is_systematic_monotonic(agg: Aggregator, structure: BAStructure, cap: int = DEFAULT_CAP) -> bool:
    try:
        fam = acceptance_family(agg, structure, cap)
    except NotSystematicError:
        return False
    except ValueError:
        return False
    return is_monotonic(fam, structure.n)

"""Brute-force backward induction over a finite menu of transfer offers.

Each voter picks one offer from a small menu before the vote:

* ``void``: no transfer;
* ``commit(x, a)``: pay ``a`` to every other voter whenever my ballot is not ``x``;
* ``bribe(y, a)``: pay ``a`` to every other voter whose ballot is ``y``.

For every joint choice the second stage plays a selected pure equilibrium of
the transferred game (lexicographically smallest by default). A joint choice
is on the path when no voter gains by switching to another offer on its menu,
comparing (goal met, payoff) lexicographically. Switching into a subgame
without a pure equilibrium never counts as a gain.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .core import Ballot, Profile
from .game import AggregationGame
from .negotiation import EndogenousGame, TransferProfile, payoff_bound_M, transfer_delta

log = logging.getLogger(__name__)

DEFAULT_GRID_CAP = 10**6


class GridCapError(ValueError):
    pass


@dataclass(frozen=True)
class Offer:
    kind: str  # "void", "commit" or "bribe"
    ballot: Ballot = ()
    amount: Fraction = Fraction(0)

    def __str__(self) -> str:
        if self.kind == "void":
            return "void"
        return f"{self.kind}({''.join(map(str, self.ballot))},{self.amount})"


VOID = Offer("void")


@dataclass(frozen=True)
class GridSpec:
    """Finite offer menu. ``amounts=None`` means {0, M, 2M, 3M}."""

    amounts: tuple[Fraction, ...] | None = None
    kinds: tuple[str, ...] = ("commit", "bribe")
    payers: tuple[int, ...] | None = None  # None: every voter may pay
    select_last: bool = False
    cap: int = DEFAULT_GRID_CAP

    def __post_init__(self):
        if self.amounts is not None:
            amounts = tuple(sorted({Fraction(a) for a in self.amounts}))
            if amounts and amounts[0] < 0:
                raise ValueError("grid amounts must be nonnegative")
            if not amounts or amounts[0] != 0:
                raise ValueError("grid amounts must contain 0")
            object.__setattr__(self, "amounts", amounts)
        if set(self.kinds) - {"commit", "bribe"}:
            raise ValueError(f"unknown offer kinds {self.kinds}")

    def resolved_amounts(self, game: AggregationGame) -> tuple[Fraction, ...]:
        if self.amounts is not None:
            return self.amounts
        big = payoff_bound_M(game)
        return (Fraction(0), big, 2 * big, 3 * big)


def menu(game: AggregationGame, grid: GridSpec) -> list[Offer]:
    positive = [a for a in grid.resolved_amounts(game) if a > 0]
    ballots = [game.structure.ballot(k) for k in range(game.structure.n_ballots)]
    out = [VOID]
    for kind in grid.kinds:
        out += [Offer(kind, b, a) for b in ballots for a in positive]
    return out


def offer_transfer(game: AggregationGame, payer: int, offer: Offer) -> TransferProfile:
    """The transfer function of one offer, as a sparse profile."""
    s = game.structure
    if offer.kind == "void":
        return TransferProfile.void()
    profiles = np.arange(s.n_profiles, dtype=np.int64)
    target = s.ballot_index(offer.ballot)
    payers, profs, payees = [], [], []
    for j in range(s.n):
        if j == payer:
            continue
        watched = payer if offer.kind == "commit" else j
        ballots = (profiles >> ((s.n - 1 - watched) * s.m)) & (s.n_ballots - 1)
        hit = profiles[ballots != target] if offer.kind == "commit" else profiles[ballots == target]
        payers.append(np.full(hit.size, payer))
        profs.append(hit)
        payees.append(np.full(hit.size, j))
    count = sum(len(p) for p in profs)
    return TransferProfile(
        np.concatenate(payers), np.concatenate(profs), np.concatenate(payees),
        np.full(count, offer.amount.numerator, dtype=object), offer.amount.denominator,
    )


@dataclass(frozen=True)
class OraclePath:
    choice: tuple[Offer, ...]  # one offer per voter (void for non-payers)
    profile: Profile

    def transfer(self, game: AggregationGame) -> TransferProfile:
        tau = TransferProfile.void()
        for i, offer in enumerate(self.choice):
            tau = tau.merge(offer_transfer(game, i, offer))
        return tau


@dataclass(frozen=True)
class OracleResult:
    paths: tuple[OraclePath, ...]
    n_choices: int
    no_equilibrium: int  # joint choices whose subgame has no pure NE
    blocked_both: int  # deviations compared between two subgames without NE

    def profiles(self) -> frozenset:
        return frozenset(p.profile for p in self.paths)


def _option_deltas(game: AggregationGame, payer: int, offers: Sequence[Offer], factor: int) -> np.ndarray:
    s = game.structure
    out = np.zeros((len(offers), s.n, s.n_profiles), dtype=object)
    for c, offer in enumerate(offers):
        tau = offer_transfer(game, payer, offer)
        if len(tau):
            out[c] = transfer_delta(tau, s) * (factor // tau.den)
    return out


def grid_spe_oracle(endo: EndogenousGame | AggregationGame, grid: GridSpec | None = None) -> OracleResult:
    game = endo.base if isinstance(endo, EndogenousGame) else EndogenousGame(endo).base
    grid = grid or GridSpec()
    s = game.structure
    s.check_cap(game.cap)
    offers = menu(game, grid)
    payers = tuple(range(s.n)) if grid.payers is None else tuple(sorted(set(grid.payers)))
    sizes = [len(offers)] * len(payers)
    total = math.prod(sizes)
    if total > grid.cap:
        raise GridCapError(f"{total} joint transfer choices exceed the cap {grid.cap}")

    den = math.lcm(1, *(a.denominator for a in grid.resolved_amounts(game)))
    factor = math.lcm(game.scale, den)
    base = game.scaled_payoffs.astype(object) * (factor // game.scale)
    if payers:
        deltas = np.stack([_option_deltas(game, a, offers, factor) for a in payers])
    else:
        deltas = np.zeros((0, 1, s.n, s.n_profiles), dtype=object)
    bound = np.abs(base).max(initial=0) + np.abs(deltas).max(axis=1).sum(axis=0).max(initial=0)
    if bound < kernels.INT64_SAFE:
        base, deltas = base.astype(np.int64), deltas.astype(np.int64)
    sel, vals = kernels.grid_select(
        s.n, s.m, game.outcomes, game.sat, base, deltas, np.array(sizes), grid.select_last
    )
    shape = tuple(sizes)
    valid = (sel >= 0).reshape(shape)
    stable = valid.copy()
    blocked_both = 0
    for axis, a in enumerate(payers):
        met = np.zeros(total, dtype=np.int64)
        ok = sel >= 0
        met[ok] = game.sat[a][game.outcomes[sel[ok]]]
        g = np.where(ok, met, -1).reshape(shape)
        v = vals[:, a].reshape(shape)
        g_best = g.max(axis=axis, keepdims=True)
        floor = v.min() - 1 if v.size else 0
        v_best = np.where(g == g_best, v, floor).max(axis=axis, keepdims=True)
        stable &= (g == g_best) & (v == v_best)
        # ordered pairs of equilibrium-free nodes one switch apart
        empty = (~valid).sum(axis=axis, keepdims=True)
        blocked_both += int(np.sum(np.where(~valid, empty - 1, 0)))
    no_eq = int(np.sum(~valid))
    if no_eq:
        log.info("%d of %d transfer choices leave no pure equilibrium", no_eq, total)
    if blocked_both:
        log.info("%d comparisons between two subgames without equilibrium", blocked_both)
    paths = []
    for t in np.flatnonzero(stable.reshape(-1)):
        idx = np.unravel_index(t, shape)
        choice = [VOID] * s.n
        for axis, a in enumerate(payers):
            choice[a] = offers[idx[axis]]
        paths.append(OraclePath(tuple(choice), s.profile(int(sel[t]))))
    return OracleResult(tuple(paths), total, no_eq, blocked_both)


def selected_equilibrium(game: AggregationGame, last: bool = False) -> Profile | None:
    """Second-stage selection on a game without transfers."""
    from .game import nash_mask

    hits = np.flatnonzero(nash_mask(game))
    if not hits.size:
        return None
    return game.structure.profile(int(hits[-1] if last else hits[0]))

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from binvote import core, suites
from binvote.core import BAStructure, ExplicitFamily, Majority, all_coalitions
from binvote.game import (
    AggregationGame,
    constant,
    enumerate_nash,
    is_efficient,
    is_nash,
    is_truthful,
    uniform,
)
from binvote.logic import TOP, Atom, cubes_consistent, parse_formula
from binvote.negotiation import (
    Certified,
    EndogenousGame,
    PreconditionError,
    Refuted,
    TransferProfile,
    Unknown,
    apply_transfers,
    check_surviving,
    commitment_transfer,
    deviation_transfer,
    paradox_analysis,
    payoff_bound_M,
    redistribute_for_coalition,
    responsible_players,
    transfer_delta,
    verify_commitment,
    verify_deviation,
)

CROSSED = ((1, 0, 0), (0, 1, 0), (0, 0, 1))  # each voter accepts only their own issue
ALL_YES = ((1, 1, 1),) * 3


def simple(n, m, goals, payoffs=None, agg=None):
    return AggregationGame(BAStructure(n, m), agg or Majority(), tuple(goals), payoffs or constant([0] * n))


# -- transfer profiles -----------------------------------------------------


def test_transfer_profile_validation():
    with pytest.raises(ValueError):
        TransferProfile.from_entries({(0, 1, 0): 1})  # self transfer
    with pytest.raises(ValueError):
        TransferProfile.from_entries({(0, 1, 1): -1})
    with pytest.raises(ValueError):
        TransferProfile.from_entries([(0, 1, 1, 1), (0, 1, 1, 2)])
    with pytest.raises(ValueError):
        TransferProfile([0], [0], [1], [1], 0)


def test_zero_entries_are_dropped_and_fractions_reduced():
    tau = TransferProfile.from_entries({(0, 3, 1): Fraction(1, 2), (1, 3, 2): 0, (2, 0, 0 + 1): Fraction(3, 2)})
    assert len(tau) == 2
    assert tau.den == 2
    assert tau.amount(0, 3, 1) == Fraction(1, 2)
    assert tau.amount(1, 3, 2) == 0


def test_transfer_lines_round_trip():
    s = BAStructure(3, 1)
    tau = TransferProfile.from_entries({(0, 5, 1): Fraction(2, 3), (2, 0, 1): 4})
    lines = tau.lines(s)
    assert lines == ["1 101 2 2/3", "3 000 2 4/1"]
    assert TransferProfile.parse(lines, s) == tau


def test_transfer_outside_structure():
    with pytest.raises(core.DimensionError):
        transfer_delta(TransferProfile.from_entries({(0, 9, 1): 1}), BAStructure(3, 1))


def test_apply_transfers_moves_money(flat_own_issue):
    tau = TransferProfile.from_entries({(0, 7, 2): 5})
    moved = apply_transfers(flat_own_issue, tau)
    assert moved.payoff(0, 7) == -5 and moved.payoff(2, 7) == 5 and moved.payoff(1, 7) == 0
    assert moved.payoff(0, 6) == 0


@st.composite
def transfers(draw, n=3, total=8):
    entries = draw(st.dictionaries(
        st.tuples(st.integers(0, n - 1), st.integers(0, total - 1), st.integers(0, n - 1)).filter(lambda t: t[0] != t[2]),
        st.fractions(min_value=0, max_value=5, max_denominator=6),
        max_size=10,
    ))
    return TransferProfile.from_entries(entries)


@given(transfers())
def test_transfers_conserve_total_payoff(tau):
    g = simple(3, 1, [TOP] * 3, uniform([[1, Fraction(1, 2)], [0, 2], [-1, 0]]))
    moved = apply_transfers(g, tau)
    for p in range(8):
        assert sum(moved.payoff(i, p) for i in range(3)) == sum(g.payoff(i, p) for i in range(3))


@given(transfers(), transfers())
def test_merge_adds_transfers(a, b):
    g = simple(3, 1, [TOP] * 3)
    both = apply_transfers(apply_transfers(g, a), b)
    merged = apply_transfers(g, a.merge(b))
    assert all(both.payoff(i, p) == merged.payoff(i, p) for i in range(3) for p in range(8))


@given(transfers())
def test_transfer_serialization_round_trip(tau):
    s = BAStructure(3, 1)
    assert TransferProfile.parse(tau.lines(s), s) == tau


# -- payoff bound ----------------------------------------------------------


def test_payoff_bound(flat_own_issue, payoff_lure):
    assert payoff_bound_M(flat_own_issue) == 1
    assert payoff_bound_M(payoff_lure) == 2
    g = simple(3, 1, [TOP] * 3, uniform([[-2, 3], [0, 0], [0, 0]]))
    assert payoff_bound_M(g) == 6


def test_endogenous_game_needs_uniform_payoffs(flat_own_issue):
    tau = TransferProfile.from_entries({(0, 7, 2): 5})
    with pytest.raises(PreconditionError):
        EndogenousGame(apply_transfers(flat_own_issue, tau))


# -- redistribution --------------------------------------------------------


def test_redistribution_removes_the_crossed_equilibrium(flat_own_issue):
    moved = redistribute_for_coalition(flat_own_issue, range(3), (1, 1, 1))
    assert is_nash(flat_own_issue, CROSSED)
    assert not is_nash(moved, CROSSED)
    assert len(enumerate_nash(moved)) == 8
    for p in range(512):
        assert sum(moved.payoff(i, p) for i in range(3)) == sum(flat_own_issue.payoff(i, p) for i in range(3))


def test_redistribution_pays_bonus_from_sponsor(flat_own_issue):
    moved = redistribute_for_coalition(flat_own_issue, {1, 2}, (0, 1, 1))
    s = flat_own_issue.structure
    p = s.profile_index(((0, 0, 0), (0, 1, 1), (0, 1, 1)))
    assert [moved.payoff(i, p) for i in range(3)] == [0, -1, 1]


def test_dictator_singleton_redistribution_is_a_no_op():
    dictator = ExplicitFamily.of([c for c in all_coalitions(3) if 0 in c])
    g = simple(3, 1, [Atom(0), TOP, TOP], agg=dictator)
    moved = redistribute_for_coalition(g, {0}, (1,))
    assert all(moved.payoff(i, p) == 0 for i in range(3) for p in range(8))


def test_redistribution_preconditions(flat_own_issue, odd_goal):
    with pytest.raises(PreconditionError, match="winning"):
        redistribute_for_coalition(flat_own_issue, {0}, (1, 0, 0))
    with pytest.raises(PreconditionError, match="consistent"):
        redistribute_for_coalition(flat_own_issue, {0, 1}, (0, 1, 0))
    with pytest.raises(PreconditionError, match="cube"):
        redistribute_for_coalition(odd_goal, {0, 1}, (1, 0, 0))
    with pytest.raises(PreconditionError, match="nonempty"):
        redistribute_for_coalition(flat_own_issue, set(), (1, 0, 0))


def test_sponsor_can_leave_a_member_unsatisfied():
    # the member who earns the bonus cannot move the outcome alone and the
    # sponsor, indifferent, stays put: an inefficient equilibrium remains
    g = simple(3, 1, [TOP, TOP, Atom(0)])
    moved = redistribute_for_coalition(g, {1, 2}, (1,))
    prof = ((0,), (0,), (1,))
    assert is_nash(moved, prof)
    assert not is_efficient(moved, prof, {1, 2})


def test_redistributed_equilibria_are_never_totally_inefficient():
    rng = random.Random(11)
    checked = 0
    while checked < 60:
        n, m = rng.choice((3, 5)), rng.choice((1, 2))
        s = BAStructure(n, m)
        wins = sorted(core.winning_coalitions(Majority(), s), key=sorted)
        c = rng.choice(wins)
        g = suites.consistent_game(rng, n, m, Majority(), c)
        moved = redistribute_for_coalition(g, c, cubes_consistent([g.cubes[i] for i in c], m))
        checked += 1
        for prof in enumerate_nash(moved):
            assert any(moved.goal_met(i, prof) for i in c)


# -- commitment ------------------------------------------------------------


def test_commitment_amounts(flat_own_issue):
    tau = commitment_transfer(flat_own_issue, ALL_YES)
    s = flat_own_issue.structure
    p = s.profile_index(((0, 1, 1), (1, 1, 1), (1, 1, 1)))
    assert tau.amount(0, p, 1) == 2 and tau.amount(0, p, 2) == 2
    assert tau.amount(1, p, 0) == 0
    moved = apply_transfers(flat_own_issue, tau)
    # voter 1 strays alone: pays 2 to each of the other two
    assert moved.payoff(0, p) == -2 * (3 - 1)


def test_commitment_makes_the_efficient_profile_dominant(flat_own_issue):
    void = verify_commitment(flat_own_issue, ALL_YES, TransferProfile.void())
    assert not void.ok and not void.unique
    chk = verify_commitment(flat_own_issue, ALL_YES, commitment_transfer(flat_own_issue, ALL_YES))
    assert chk.ok and all(chk.dominant) and chk.outcome_matches


def test_commitment_to_an_untruthful_ballot_fails(flat_own_issue):
    prof = ((1, 1, 1), (1, 1, 1), (1, 1, 0))
    assert is_nash(flat_own_issue, prof)
    chk = verify_commitment(flat_own_issue, prof, commitment_transfer(flat_own_issue, prof))
    assert chk.dominant == (True, True, False)
    assert "voter 3" in chk.diagnostics[0]


# -- deviation -------------------------------------------------------------


def test_deviation_offer_in_a_constant_game(flat_own_issue):
    tau = deviation_transfer(flat_own_issue, 0, (1, 1, 1), TransferProfile.void())
    s = flat_own_issue.structure
    p = s.profile_index(((0, 0, 0), (1, 1, 1), (0, 0, 0)))
    assert tau.amount(0, p, 1) == 1 and tau.amount(0, p, 2) == 0
    chk = verify_deviation(flat_own_issue, 0, (1, 1, 1), tau)
    assert chk.isolated and chk.profitable


def test_deviation_keeps_other_commitments(flat_own_issue):
    anchor = commitment_transfer(flat_own_issue, CROSSED)
    tau = deviation_transfer(flat_own_issue, 0, (1, 1, 1), anchor)
    assert len(tau.only_payer(1)) == len(anchor.only_payer(1))
    assert tau.only_payer(1) == anchor.only_payer(1)


# -- survival --------------------------------------------------------------


def test_survival_statuses(flat_own_issue):
    refuted = check_surviving(flat_own_issue, CROSSED)
    assert isinstance(refuted, Refuted) and refuted.route == "iesds"
    assert refuted.coalition == frozenset(range(3))
    certified = check_surviving(EndogenousGame(flat_own_issue), ALL_YES)
    assert isinstance(certified, Certified) and certified.check.ok


def test_survival_rejects_non_equilibria(payoff_lure):
    with pytest.raises(PreconditionError) as err:
        check_surviving(payoff_lure, ((0, 1, 0), (0, 0, 0), (0, 0, 1)))
    assert err.value.name == "Nash equilibrium"


def test_survival_needs_cube_goals(odd_goal):
    with pytest.raises(PreconditionError, match="cube"):
        check_surviving(odd_goal, enumerate_nash(odd_goal)[0])


def test_untruthful_efficient_equilibrium_is_unknown(flat_own_issue):
    status = check_surviving(flat_own_issue, ((1, 1, 1), (1, 1, 1), (1, 1, 0)))
    assert isinstance(status, Unknown)
    assert status.reason.startswith("commitment witness fails")


def test_certification_tracks_truthfulness_exactly():
    # efficient equilibria are certified exactly when every ballot is truthful
    rng = random.Random(3)
    seen = {True: 0, False: 0}
    for _ in range(25):
        g = suites.n_consistent_game(rng)
        everyone = g.structure.everyone
        for prof in enumerate_nash(g):
            if not is_efficient(g, prof, everyone):
                continue
            truthful = all(is_truthful(g, i, prof[i]) for i in range(g.n))
            seen[truthful] += 1
            assert isinstance(check_surviving(g, prof), Certified) == truthful
    assert seen[True] and seen[False]


def test_refutation_can_fail_isolation_when_outsiders_disagree():
    goals = [Atom(0), TOP, parse_formula("!p1")]
    g = simple(3, 1, goals, uniform([[0, 1], [1, 3], [2, 2]]))
    statuses = [check_surviving(g, prof) for prof in enumerate_nash(g)]
    assert len(statuses) == 3
    assert all(isinstance(s, Refuted) and s.route == "equilibria" for s in statuses)
    assert all(s.check.profitable and not s.check.isolated for s in statuses)


# -- integrity constraints -------------------------------------------------


def test_trivial_constraint_makes_everyone_responsible(flat_own_issue):
    assert responsible_players(flat_own_issue, TOP) == frozenset(range(3))


def test_dilemma_report(dilemma):
    report = paradox_analysis(dilemma.game, dilemma.constraint)
    assert report.responsible == frozenset({1})
    assert report.n_consistent and report.guarantee
    rows = {r.profile: r for r in report.rows}
    row = rows[((1, 0, 1), (1, 1, 0), (0, 0, 0))]
    assert row.paradox and isinstance(row.status, Refuted)
    assert all(r.outcome_admissible for r in report.rows if isinstance(r.status, Certified))


def test_paradox_report_without_preconditions(odd_goal):
    report = paradox_analysis(odd_goal, TOP)
    assert report.status_error is not None
    assert all(r.status is None for r in report.rows)


def test_status_routes_match_their_evidence():
    rng = random.Random(21)
    for _ in range(15):
        n, m = rng.choice(((3, 1), (3, 2), (5, 1)))
        c = suites.random_majority(rng, n)
        g = suites.consistent_game(rng, n, m, Majority(), c)
        wins = core.winning_coalitions(g.aggregator, g.structure)
        for prof in enumerate_nash(g):
            status = check_surviving(g, prof)
            if isinstance(status, Certified):
                assert is_efficient(g, prof, range(n))
            elif isinstance(status, Refuted):
                assert status.coalition in wins
                assert cubes_consistent([g.cubes[i] for i in status.coalition], m) is not None
                assert not is_efficient(g, prof, status.coalition)

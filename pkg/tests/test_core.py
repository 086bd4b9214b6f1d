import itertools

import pytest
from hypothesis import given, strategies as st

from binvote import core
from binvote.core import (
    BAStructure,
    CapExceededError,
    DimensionError,
    ExplicitFamily,
    GeneralTable,
    Majority,
    Quota,
    acceptor_set,
    aggregate,
    all_coalitions,
    inverse_ballot,
    is_monotonic,
    is_systematic,
    is_systematic_monotonic,
    is_winning_by_enumeration,
    outcome_table,
    resilient_winning_coalitions,
    systematicity,
    winning_coalitions,
)

DILEMMA = ((1, 0, 1), (1, 1, 0), (0, 0, 0))


def test_structure_rejects_even_or_small_electorates():
    for n in (1, 2, 4):
        with pytest.raises(ValueError):
            BAStructure(n, 2)
    with pytest.raises(ValueError):
        BAStructure(3, 0)


def test_profile_encoding_puts_voter_one_first():
    s = BAStructure(3, 2)
    assert s.ballot_index((1, 0)) == 2
    assert s.profile_index(((0, 1), (0, 0), (0, 0))) == 1 << 4
    for p in range(s.n_profiles):
        assert s.profile_index(s.profile(p)) == p


def test_profile_dimension_errors():
    s = BAStructure(3, 2)
    with pytest.raises(DimensionError):
        s.check_profile(((1, 0), (1, 0)))
    with pytest.raises(DimensionError):
        s.check_profile(((1, 0), (1, 0, 1), (0, 0)))
    with pytest.raises(ValueError):
        s.check_profile(((1, 0), (2, 0), (0, 0)))


def test_cap():
    with pytest.raises(CapExceededError):
        BAStructure(5, 5).check_cap()
    BAStructure(5, 4).check_cap()


def test_majority_on_the_dilemma_profile():
    assert aggregate(Majority(), DILEMMA) == (1, 0, 0)


def test_acceptor_sets():
    assert acceptor_set(DILEMMA, 0) == {0, 1}
    assert acceptor_set(DILEMMA, 2) == {0}
    with pytest.raises(IndexError):
        acceptor_set(DILEMMA, 3)


def test_quota_examples():
    q = Quota((3, 3, 3))
    assert aggregate(q, DILEMMA) == (0, 0, 0)
    assert aggregate(Quota((1, 2, 3)), DILEMMA) == (1, 0, 0)
    assert aggregate(Quota((1, 1, 1)), DILEMMA) == (1, 1, 1)
    with pytest.raises(DimensionError):
        aggregate(Quota((1, 2)), DILEMMA)


def test_explicit_family_must_be_monotonic():
    s = BAStructure(3, 1)
    with pytest.raises(ValueError, match="not monotonic"):
        core.validate(ExplicitFamily.of([{0}]), s)
    core.validate(ExplicitFamily.of([{0}, {0, 1}, {0, 2}, {0, 1, 2}]), s)


def test_monotonicity_witness_is_a_one_step_extension():
    fam = [{0, 1}]
    c, bigger = core.monotonicity_witness(fam, 3)
    assert c == {0, 1} and bigger == {0, 1, 2}
    assert is_monotonic([{0, 1}, {0, 1, 2}], 3)


def test_inverse_ballot():
    assert inverse_ballot((1, 0, 1)) == (0, 1, 0)


def test_majority_winning_coalitions():
    s = BAStructure(3, 2)
    wins = winning_coalitions(Majority(), s)
    assert wins == {frozenset(c) for c in ({0, 1}, {0, 2}, {1, 2}, {0, 1, 2})}
    assert resilient_winning_coalitions(Majority(), s) == {frozenset({0, 1, 2})}


def test_dictator_family():
    s = BAStructure(3, 1)
    fam = ExplicitFamily.of([c for c in all_coalitions(3) if 0 in c])
    wins = winning_coalitions(fam, s)
    assert frozenset({0}) in wins
    assert frozenset({1, 2}) not in wins
    assert resilient_winning_coalitions(fam, s) == set()


def test_quota_with_unequal_thresholds_is_not_systematic():
    s = BAStructure(3, 2)
    report = systematicity(Quota((1, 3)), s)
    assert not report.systematic
    (p1, j1), (p2, j2) = report.witness
    assert acceptor_set(p1, j1) == acceptor_set(p2, j2)
    assert aggregate(Quota((1, 3)), p1)[j1] != aggregate(Quota((1, 3)), p2)[j2]
    assert not is_systematic_monotonic(Quota((1, 3)), s)


def test_general_table_equal_to_majority_is_systematic():
    s = BAStructure(3, 2)
    table = GeneralTable.from_function(s, lambda prof: aggregate(Majority(), prof))
    assert is_systematic(table, s)
    assert is_systematic_monotonic(table, s)
    assert winning_coalitions(table, s) == winning_coalitions(Majority(), s)
    assert list(outcome_table(table, s)) == list(outcome_table(Majority(), s))


def test_non_monotonic_general_table():
    s = BAStructure(3, 1)
    # accept exactly when one voter accepts: systematic, not monotonic
    table = GeneralTable.from_function(s, lambda prof: (int(sum(b[0] for b in prof) == 1),))
    assert is_systematic(table, s)
    assert not is_systematic_monotonic(table, s)


def test_outcome_table_matches_aggregate():
    s = BAStructure(3, 2)
    agg = Quota((1, 2))
    table = outcome_table(agg, s)
    for p in range(s.n_profiles):
        assert s.ballot(int(table[p])) == aggregate(agg, s.profile(p))


# -- properties ------------------------------------------------------------


def families(n):
    seeds = st.lists(st.sets(st.integers(0, n - 1), min_size=1), min_size=1, max_size=3)
    return seeds.map(
        lambda ss: ExplicitFamily(frozenset(c for c in all_coalitions(n) if any(set(x) <= c for x in ss)))
    )


@pytest.mark.parametrize("n,m", [(3, 1), (3, 2), (5, 1), (5, 2)])
def test_winning_closed_form_matches_enumeration_for_majority(n, m):
    s = BAStructure(n, m)
    wins = winning_coalitions(Majority(), s)
    for c in all_coalitions(n):
        assert (c in wins) == is_winning_by_enumeration(Majority(), s, c)


@given(st.sampled_from([3, 5]).flatmap(lambda n: st.tuples(st.just(n), families(n))))
def test_winning_closed_form_matches_enumeration_for_families(arg):
    n, fam = arg
    s = BAStructure(n, 1)
    wins = winning_coalitions(fam, s)
    for c in all_coalitions(n):
        assert (c in wins) == is_winning_by_enumeration(fam, s, c)


@given(st.sampled_from([3, 5]).flatmap(lambda n: st.tuples(st.just(n), families(n))))
def test_resilient_coalitions_stay_winning_without_any_member(arg):
    n, fam = arg
    s = BAStructure(n, 1)
    wins = winning_coalitions(fam, s)
    for c in resilient_winning_coalitions(fam, s):
        assert c in wins
        assert all(c - {i} in wins for i in c)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=3, max_size=3))
def test_majority_is_neutral(profile):
    profile = tuple(profile)
    flipped = tuple(inverse_ballot(b) for b in profile)
    assert aggregate(Majority(), flipped) == inverse_ballot(aggregate(Majority(), profile))


@given(st.sampled_from([3, 5]).flatmap(lambda n: st.tuples(st.just(n), families(n))))
def test_family_rules_are_systematic_and_recover_their_family(arg):
    n, fam = arg
    s = BAStructure(n, 2)
    report = systematicity(fam, s)
    assert report.systematic
    assert report.family == fam.family
    assert is_systematic_monotonic(fam, s)

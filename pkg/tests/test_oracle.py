import random
from fractions import Fraction

import pytest

from binvote import suites
from binvote.core import BAStructure, Majority
from binvote.game import AggregationGame, enumerate_nash, uniform
from binvote.logic import TOP, Atom
from binvote.negotiation import Certified, Refuted, apply_transfers, check_surviving, payoff_bound_M
from binvote.oracle import (
    VOID,
    GridCapError,
    GridSpec,
    Offer,
    grid_spe_oracle,
    menu,
    offer_transfer,
    selected_equilibrium,
)


def lock_in_game():
    pay = uniform([[1, -1], [0, Fraction(-1, 2)], [0, -1]])
    return AggregationGame(BAStructure(3, 1), Majority(), (TOP, Atom(0), TOP), pay)


def test_grid_spec_validation():
    with pytest.raises(ValueError, match="nonnegative"):
        GridSpec(amounts=(-1, 0))
    with pytest.raises(ValueError, match="contain 0"):
        GridSpec(amounts=(1, 2))
    with pytest.raises(ValueError):
        GridSpec(kinds=("gift",))
    assert GridSpec(amounts=(2, 0, 1, 1)).amounts == (0, 1, 2)


def test_default_menu_size(flat_own_issue):
    offers = menu(flat_own_issue, GridSpec())
    assert len(offers) == 1 + 2 * 8 * 3
    assert offers[0] == VOID
    assert GridSpec().resolved_amounts(flat_own_issue) == (0, 1, 2, 3)


def test_offer_transfers():
    g = lock_in_game()
    s = g.structure
    commit = offer_transfer(g, 0, Offer("commit", (1,), Fraction(2)))
    # voter 1 pays 2 to each other voter whenever they vote 0
    assert commit.amount(0, s.profile_index(((0,), (1,), (1,))), 2) == 2
    assert commit.amount(0, s.profile_index(((1,), (1,), (1,))), 2) == 0
    bribe = offer_transfer(g, 0, Offer("bribe", (1,), Fraction(1)))
    p = s.profile_index(((0,), (1,), (0,)))
    assert bribe.amount(0, p, 1) == 1 and bribe.amount(0, p, 2) == 0
    assert len(offer_transfer(g, 0, VOID)) == 0
    assert str(Offer("bribe", (1, 0), Fraction(3, 2))) == "bribe(10,3/2)"


def test_void_only_grid_plays_the_selected_base_equilibrium(flat_own_issue):
    for grid in (GridSpec(amounts=(0,)), GridSpec(payers=())):
        res = grid_spe_oracle(flat_own_issue, grid)
        assert res.n_choices == 1
        assert res.profiles() == {selected_equilibrium(flat_own_issue)}
    last = grid_spe_oracle(flat_own_issue, GridSpec(amounts=(0,), select_last=True))
    assert last.profiles() == {enumerate_nash(flat_own_issue)[-1]}


def test_grid_cap(flat_own_issue):
    with pytest.raises(GridCapError):
        grid_spe_oracle(flat_own_issue, GridSpec(cap=1000))


def test_path_profile_is_an_equilibrium_of_its_subgame():
    g = lock_in_game()
    for path in grid_spe_oracle(g).paths[:10]:
        moved = apply_transfers(g, path.transfer(g))
        assert path.profile in enumerate_nash(moved)


def test_commitments_can_lock_in_a_refuted_equilibrium():
    # the other two commit 2M to ballot 0; voter 2's largest bribe (3M to each
    # of two voters) cannot outweigh what they would have to pay
    g = lock_in_game()
    prof = ((0,), (0,), (0,))
    assert isinstance(check_surviving(g, prof), Refuted)
    big = payoff_bound_M(g)
    res = grid_spe_oracle(g)
    locks = [p.choice for p in res.paths if p.profile == prof]
    assert (Offer("commit", (0,), 2 * big), VOID, Offer("commit", (0,), 2 * big)) in locks


def test_certified_profiles_appear_on_some_path():
    rng = random.Random(7)
    for _ in range(10):
        g = suites.consistent_game(rng, 3, rng.choice((1, 2)), Majority(), range(3))
        on_path = grid_spe_oracle(g).profiles()
        for prof in enumerate_nash(g):
            if isinstance(check_surviving(g, prof), Certified):
                assert prof in on_path


def test_incompatible_coalitions_goal_holders_reach_no_path(clashing):
    res = grid_spe_oracle(clashing, GridSpec(payers=(0, 4)))
    assert res.n_choices == 25**2
    assert res.paths == ()

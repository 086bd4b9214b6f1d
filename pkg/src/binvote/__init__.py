"""Voting games over binary issues, with pre-vote side payments."""

from ._accel import backend
from .core import (
    BAStructure,
    ExplicitFamily,
    GeneralTable,
    Majority,
    Quota,
    acceptor_set,
    aggregate,
    inverse_ballot,
    is_monotonic,
    is_systematic,
    resilient_winning_coalitions,
    winning_coalitions,
)
from .game import (
    AggregationGame,
    classify_profile,
    constant,
    dominant_strategy_equilibrium,
    enumerate_nash,
    iesds,
    is_constant,
    is_nash,
    is_truthful,
    is_uniform,
    is_weakly_dominant,
    prefers,
    uniform,
)
from .logic import as_cube, cubes_consistent, entails, models_of, parse_formula, satisfies
from .negotiation import (
    TransferProfile,
    apply_transfers,
    check_surviving,
    commitment_transfer,
    deviation_transfer,
    paradox_analysis,
    payoff_bound_M,
    redistribute_for_coalition,
    verify_commitment,
)

__version__ = "0.1.0"

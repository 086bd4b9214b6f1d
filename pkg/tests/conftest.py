import os

import pytest
from hypothesis import HealthCheck, settings

from binvote.gamefile import bundled, load_game

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def _bundle(name):
    return load_game(bundled(name))


@pytest.fixture(scope="session")
def dilemma():
    return _bundle("discursive_dilemma")


@pytest.fixture(scope="session")
def flat_own_issue():
    return _bundle("inefficient_equilibria").game


@pytest.fixture(scope="session")
def payoff_lure():
    return _bundle("truthful_not_dominant").game


@pytest.fixture(scope="session")
def odd_goal():
    return _bundle("odd_goal").game


@pytest.fixture(scope="session")
def clashing():
    return _bundle("incompatible_coalitions").game


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for row in mod.RESULTS:
        terminalreporter.write_line(mod.format_result(*row))

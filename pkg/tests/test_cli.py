import pytest

from binvote import cli, suites
from binvote.gamefile import bundled


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_aggregate_table(capsys):
    code, out, _ = run(capsys, "aggregate", "--game", "discursive_dilemma", "--profile", "101 110 000")
    assert code == 0
    assert out.splitlines()[-1] == "outcome 1 0 0"
    assert "{A,B}" in out


def test_aggregate_accepts_a_path(capsys):
    code, out, _ = run(capsys, "aggregate", "--game", str(bundled("discursive_dilemma")), "--profile", "101,110,000")
    assert code == 0 and out.endswith("outcome 1 0 0\n")


def test_bad_profile_exits_2(capsys):
    code, out, err = run(capsys, "aggregate", "--game", "discursive_dilemma", "--profile", "10x 110 000")
    assert code == 2
    assert "binvote aggregate: error:" in err and "position 3" in err


def test_unknown_game_exits_2(capsys):
    code, _, err = run(capsys, "nash", "--game", "no_such_game")
    assert code == 2 and "error" in err


def test_nash_flags_the_crossed_profile(capsys):
    code, out, _ = run(capsys, "nash", "--game", "inefficient_equilibria")
    assert code == 0
    assert "100 010 001 -> 000  NE truthful:N totally-inefficient:N" in out.splitlines()


def test_nash_machine_output_is_deterministic(capsys):
    _, first, _ = run(capsys, "nash", "--game", "inefficient_equilibria", "--machine", "--coalition", "1,2")
    _, second, _ = run(capsys, "nash", "--game", "inefficient_equilibria", "--machine", "--coalition", "{1,2}")
    assert first == second
    header = first.splitlines()[1]
    assert header == "# profile\toutcome\tcoalition\ttruthful\tefficient\ttotally_inefficient"
    assert "100 010 001\t000\t{1,2}\t1\t0\t1" in first.splitlines()


def test_survive_dilemma(capsys):
    code, out, _ = run(capsys, "survive", "--game", "discursive_dilemma", "--machine")
    assert code == 0
    rows = {line.split("\t")[0]: line.split("\t") for line in out.splitlines() if not line.startswith("#")}
    assert rows["101 110 000"][2] == "REFUTED"
    assert rows["110 110 110"][2] == "CERTIFIED"
    assert len(rows) == 216


def test_survive_with_witnesses_and_grid(capsys):
    code, out, _ = run(capsys, "survive", "--game", "inefficient_equilibria", "--witnesses")
    assert code == 0 and "witness" in out
    code, _, err = run(capsys, "survive", "--game", "incompatible_coalitions", "--grid", "default")
    assert code == 2 and "cap" in err
    code, _, err = run(capsys, "survive", "--game", "inefficient_equilibria", "--grid", "1,2")
    assert code == 2 and "--grid" in err


def test_survive_precondition_error(capsys):
    code, _, err = run(capsys, "survive", "--game", "odd_goal")
    assert code == 2 and "cube" in err


def test_paradox(capsys):
    code, out, _ = run(capsys, "paradox", "--game", "discursive_dilemma")
    assert code == 0
    assert "responsible players: {B}" in out
    line = [l for l in out.splitlines() if l.startswith("101 110 000")][0]
    assert "-> 100" in line and "REFUTED" in line


def test_verify_skips_with_zero_count(capsys):
    code, out, _ = run(capsys, "verify", "--count", "0", "--machine")
    assert code == 0
    records = [l.split("\t") for l in out.splitlines() if not l.startswith("#")]
    assert {r[0] for r in records} == set(suites.SUITES)
    assert all(r[1] == "skipped" for r in records)


def test_verify_passing_suite(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "truthful-dominance", "--count", "10")
    assert code == 0 and "pass" in out


def test_verify_catches_a_broken_predicate(capsys, monkeypatch):
    monkeypatch.setattr(suites, "dominance_check", lambda game, i, b: False)
    code, out, _ = run(capsys, "verify", "--suite", "truthful-dominance", "--count", "5")
    assert code == 1 and "FAIL" in out


def test_verify_unknown_suite(capsys):
    code, _, err = run(capsys, "verify", "--suite", "nope")
    assert code == 2 and "unknown suites" in err


def test_verify_game_witnesses(capsys):
    code, out, _ = run(capsys, "verify", "--count", "0", "--game", "inefficient_equilibria")
    assert code == 0 and "game-witnesses" in out


def test_survive_grid_column(capsys, tmp_path):
    path = tmp_path / "lock.game"
    path.write_text(
        "voters 3\nissues 1\naggregator majority\ngoal 1 top\ngoal 2 p1\ngoal 3 top\n"
        "payoffs uniform\n  1 0 1\n  1 1 -1\n  2 0 0\n  2 1 -1/2\n  3 0 0\n  3 1 -1\nend\n"
    )
    code, out, _ = run(capsys, "survive", "--game", str(path), "--grid", "default", "--machine")
    assert code == 0
    lines = out.splitlines()
    assert lines[1].endswith("\toracle_path")
    rows = {l.split("\t")[0]: l.split("\t") for l in lines if not l.startswith("#")}
    assert rows["0 0 0"][2] == "REFUTED" and rows["0 0 0"][-1] == "1"

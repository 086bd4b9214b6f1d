"""Strategic voting games on binary issues, from the command line.

Usage: ``binvote <command> --game FILE ...``. Human output is a plain table;
``--machine`` switches to tab-separated records under ``#`` header lines,
stable across runs.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import re
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import core
from .core import CapExceededError, format_coalition
from .game import classify_profile, enumerate_nash
from .gamefile import GameFileError, bundled, bundled_names, format_profile, load_game, parse_profile
from .logic import CapExceededError as LogicCapError, format_formula
from .negotiation import Certified, PreconditionError, Refuted, check_surviving, paradox_analysis
from .oracle import GridCapError, GridSpec, grid_spe_oracle
from .suites import DEFAULT_COUNTS, SUITES, run_suites


class CliError(Exception):
    pass


def _resolve_game(arg: str | None) -> Path:
    if not arg:
        raise CliError("--game is required")
    path = Path(arg)
    if path.exists():
        return path
    if arg in bundled_names():
        return bundled(arg)
    raise CliError(f"no such game file {arg!r} (bundled: {', '.join(bundled_names())})")


def _load(args):
    path = _resolve_game(args.game)
    gf = load_game(path, args.cap)
    gf.game.structure.check_cap(gf.game.cap)
    return gf, hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def _parse_coalition(text: str, structure) -> frozenset:
    text = text.strip()
    if text in ("N", "all"):
        return structure.everyone
    body = text.strip("{}").strip()
    out = set()
    for tok in filter(None, re.split(r"[\s,]+", body)):
        if structure.voter_names and tok in structure.voter_names:
            out.add(structure.voter_names.index(tok))
        elif tok.isdigit() and 1 <= int(tok) <= structure.n:
            out.add(int(tok) - 1)
        else:
            raise CliError(f"unknown voter {tok!r} in coalition {text!r}")
    return frozenset(out)


def _coalition_label(c, structure) -> str:
    if c == structure.everyone:
        return "N"
    return format_coalition(c)


def _grid(text: str | None) -> GridSpec | None:
    if text is None:
        return None
    if text == "default":
        return GridSpec()
    try:
        amounts = tuple(Fraction(t) for t in text.split(","))
    except ValueError:
        raise CliError(f"bad --grid {text!r}; use 'default' or amounts like 0,1,2") from None
    try:
        return GridSpec(amounts=amounts)
    except ValueError as exc:
        raise CliError(f"--grid: {exc}") from None


class Out:
    def __init__(self, machine: bool, stream=None):
        self.machine = machine
        self.stream = stream or sys.stdout

    def header(self, *names: str) -> None:
        if self.machine:
            print("# " + "\t".join(names), file=self.stream)

    def record(self, *values) -> None:
        print("\t".join(str(v) for v in values), file=self.stream)

    def line(self, text: str = "") -> None:
        print(text, file=self.stream)


def _flag(b: bool) -> str:
    return "1" if b else "0"


# -- commands --------------------------------------------------------------


def cmd_aggregate(args, out: Out) -> int:
    gf, digest = _load(args)
    game = gf.game
    s = game.structure
    if not args.profile:
        raise CliError("--profile is required")
    try:
        profile = parse_profile(args.profile, s)
    except GameFileError as exc:
        raise CliError(str(exc)) from None
    outcome = core.aggregate(game.aggregator, profile, s)
    names = s.issue_names or tuple(f"p{j + 1}" for j in range(s.m))
    if out.machine:
        out.header("aggregate", f"game={digest}", f"profile={format_profile(profile)}")
        out.header("issue", "outcome", "acceptors")
    else:
        out.line(f"{'issue':<8}{'outcome':<9}acceptors")
    for j in range(s.m):
        acc = core.acceptor_set(profile, j)
        label = "{" + ",".join(s.voter_label(i) for i in sorted(acc)) + "}"
        if out.machine:
            out.record(names[j], outcome[j], label)
        else:
            out.line(f"{names[j]:<8}{outcome[j]:<9}{label}")
    if not out.machine:
        out.line("outcome " + " ".join(map(str, outcome)))
    return 0


def cmd_nash(args, out: Out) -> int:
    gf, digest = _load(args)
    game = gf.game
    s = game.structure
    coalitions = [_parse_coalition(c, s) for c in args.coalition] or [s.everyone]
    profiles = enumerate_nash(game)
    if out.machine:
        out.header("nash", f"game={digest}", f"count={len(profiles)}")
        out.header("profile", "outcome", "coalition", "truthful", "efficient", "totally_inefficient")
    else:
        out.line(f"{len(profiles)} pure Nash equilibria")
    for prof in profiles:
        cls = classify_profile(game, prof, coalitions)
        outcome = "".join(map(str, game.outcome(prof)))
        flags = []
        for c in coalitions:
            label = _coalition_label(c, s)
            row = (cls.truthful(c), cls.efficient_for[c], cls.totally_inefficient_for[c])
            if out.machine:
                out.record(format_profile(prof), outcome, label, *map(_flag, row))
            else:
                flags += [f"{name}:{label}" for name, ok in zip(
                    ("truthful", "efficient", "totally-inefficient"), row) if ok]
        if not out.machine:
            out.line(f"{format_profile(prof)} -> {outcome}  NE " + " ".join(flags))
    return 0


def _status_fields(status, s):
    if isinstance(status, Refuted):
        return (
            str(status.deviator + 1), _coalition_label(status.coalition, s),
            "".join(map(str, status.target)), status.route, "",
        )
    if isinstance(status, Certified):
        return ("", "", "", "commitment", "")
    return ("", "", "", "", status.reason)


def _witness_digest(tau, s) -> str:
    return hashlib.sha256("\n".join(tau.lines(s)).encode()).hexdigest()[:12]


def cmd_survive(args, out: Out) -> int:
    gf, digest = _load(args)
    game = gf.game
    s = game.structure
    profiles = enumerate_nash(game)
    grid = _grid(args.grid)
    on_path = grid_spe_oracle(game, grid).profiles() if grid else None
    if out.machine:
        out.header("survive", f"game={digest}", f"count={len(profiles)}")
        cols = ["profile", "outcome", "status", "deviator", "coalition", "target", "route",
                "witness_entries", "witness_sha", "reason"]
        out.header(*(cols + (["oracle_path"] if grid else [])))
    for prof in profiles:
        status = check_surviving(game, prof)
        outcome = "".join(map(str, game.outcome(prof)))
        witness = getattr(status, "witness", None)
        size = len(witness) if witness is not None else 0
        sha = _witness_digest(witness, s) if witness is not None else ""
        dev, coal, target, route, reason = _status_fields(status, s)
        extra = [_flag(prof in on_path)] if grid else []
        if out.machine:
            out.record(format_profile(prof), outcome, status.label, dev, coal, target, route,
                       size, sha, reason, *extra)
        else:
            text = f"{format_profile(prof)} -> {outcome}  {status.label}"
            if isinstance(status, Refuted):
                text += f" deviator {dev} coalition {coal} target {target} route {route}"
            elif not isinstance(status, Certified):
                text += f" ({reason})"
            if witness is not None:
                text += f" witness {size} entries sha {sha}"
            if grid:
                text += " oracle:" + ("on-path" if prof in on_path else "off-path")
            out.line(text)
        if args.witnesses and witness is not None:
            for line in witness.lines(s):
                if out.machine:
                    out.record("+witness", *line.split())
                else:
                    out.line("    " + line)
    return 0


def cmd_paradox(args, out: Out) -> int:
    gf, digest = _load(args)
    game = gf.game
    s = game.structure
    if gf.constraint is None:
        raise CliError("the game file has no 'constraint' line")
    rep = paradox_analysis(game, gf.constraint)
    names = s.issue_names
    responsible = "{" + ",".join(s.voter_label(i) for i in sorted(rep.responsible)) + "}"
    if out.machine:
        out.header("paradox", f"game={digest}", f"constraint={format_formula(gf.constraint, names)}",
                   f"responsible={responsible}", f"guarantee={_flag(rep.guarantee)}")
        out.header("profile", "outcome", "outcome_admissible", "ballots_admissible", "paradox", "status")
    else:
        out.line(f"constraint: {format_formula(gf.constraint, names)}")
        out.line(f"responsible players: {responsible}")
        out.line("guarantee: every surviving equilibrium is admissible"
                 if rep.guarantee else "guarantee: none (needs N-consistency and a responsible player)")
        if rep.status_error:
            out.line(f"survival not assessed: {rep.status_error}")
    for row in rep.rows:
        status = row.status.label if row.status else "-"
        outcome = "".join(map(str, row.outcome))
        ballots = "".join(_flag(b) for b in row.ballots_admissible)
        if out.machine:
            out.record(format_profile(row.profile), outcome, _flag(row.outcome_admissible), ballots,
                       _flag(row.paradox), status)
        else:
            verdict = "admissible" if row.outcome_admissible else "INADMISSIBLE"
            mark = " paradox" if row.paradox else ""
            out.line(f"{format_profile(row.profile)} -> {outcome}  {verdict} ballots:{ballots}{mark}  {status}")
    return 0


def cmd_verify(args, out: Out) -> int:
    names = list(SUITES)
    if args.suite:
        unknown = set(args.suite) - set(names)
        if unknown:
            raise CliError(f"unknown suites {sorted(unknown)}; choose from {names}")
        names = [n for n in names if n in args.suite]
    counts = {n: (args.count if args.count is not None else DEFAULT_COUNTS[n]) for n in names}
    results = run_suites(args.seed, counts, names)
    failed = 0
    if out.machine:
        out.header("verify", f"seed={args.seed}")
        out.header("suite", "result", "cases", "checks", "failures", "first_failure")
    for r in results:
        result = "skipped" if r.skipped else ("pass" if r.passed else "FAIL")
        failed += not r.passed
        first = r.failures[0] if r.failures else ""
        if out.machine:
            out.record(r.name, result, r.cases, r.checks, len(r.failures), first)
        else:
            out.line(f"{r.name:<28}{result:<8}{r.cases:>5} games {r.checks:>6} checks {len(r.failures):>5} failures")
            for f in r.failures[: args.show]:
                out.line(f"    {f}")
            for note in r.notes:
                out.line(f"    note: {note}")
    if args.game:
        failed += _verify_game(args, out)
    return 1 if failed else 0


def _verify_game(args, out: Out) -> int:
    """Check every survival witness of the given game."""
    from .negotiation import verify_commitment, verify_deviation

    gf, _ = _load(args)
    game = gf.game
    bad = 0
    checked = 0
    for prof in enumerate_nash(game):
        status = check_surviving(game, prof)
        if isinstance(status, Certified):
            checked += 1
            bad += not verify_commitment(game, prof, status.witness).ok
        elif isinstance(status, Refuted):
            checked += 1
            bad += not verify_deviation(game, status.deviator, status.target, status.witness).profitable
    result = "pass" if not bad else "FAIL"
    if out.machine:
        out.record("game-witnesses", result, 1, checked, bad, "")
    else:
        out.line(f"{'game-witnesses':<28}{result:<8}{1:>5} games {checked:>6} checks {bad:>5} failures")
    return 1 if bad else 0


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--game", help="game file, or the name of a bundled game")
    common.add_argument("--cap", type=int, default=None, help="largest n*m enumerated (default 20)")
    common.add_argument("--machine", action="store_true", help="tab-separated output")

    parser = argparse.ArgumentParser(prog="binvote", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", parents=[common], help="collective ballot of a profile")
    p.add_argument("--profile", help="ballots, e.g. '101 110 000'")
    p.set_defaults(run=cmd_aggregate)

    p = sub.add_parser("nash", parents=[common], help="list pure Nash equilibria")
    p.add_argument("--coalition", action="append", default=[],
                   help="coalition to classify against, e.g. 1,2 (repeatable; default N)")
    p.set_defaults(run=cmd_nash)

    p = sub.add_parser("survive", parents=[common], help="survival status of each equilibrium")
    p.add_argument("--grid", help="also run the grid oracle: 'default' or amounts like 0,1,2")
    p.add_argument("--witnesses", action="store_true", help="print every witness transfer")
    p.set_defaults(run=cmd_survive)

    p = sub.add_parser("paradox", parents=[common], help="admissibility under the game's constraint")
    p.set_defaults(run=cmd_paradox)

    p = sub.add_parser("verify", parents=[common], help="run the randomized property suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=None, help="games per suite (0 skips)")
    p.add_argument("--suite", action="append", help=f"suite to run (repeatable): {', '.join(SUITES)}")
    p.add_argument("--show", type=int, default=3, help="failures listed per suite")
    p.set_defaults(run=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Out(args.machine)
    try:
        code = args.run(args, out)
        sys.stdout.flush()
        return code
    except (CliError, GameFileError, PreconditionError, CapExceededError, LogicCapError,
            GridCapError, core.DimensionError) as exc:
        print(f"binvote {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # output cut short by a closed pipe (e.g. `| head`)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Plain-text game files.

A file is a sequence of directives, one per line; ``#`` starts a comment::

    voters A B C              # or: voters 3
    issues W F P              # or: issues 3
    aggregator majority       # or: quota 2 2 3 / coalitions {1,2} {1,3} ...
    goal A W                  # voter by name or 1-based index
    goal B F
    goal C !P
    payoffs constant 0 0 0
    constraint W -> (F | P)

Outcome-based payoffs use a block; ``default`` fills missing entries::

    payoffs uniform
      default 0
      3 010 1                 # voter, outcome bits, value
    end

Profile-based payoffs start from constant values and list exceptions::

    payoffs full
      base 0 0 0
      1 101110000 5           # voter, profile bits (voter-major), value
    end

Values are integers or ``p/q`` rationals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    BAStructure,
    ExplicitFamily,
    GeneralTable,
    Majority,
    Profile,
    Quota,
    format_coalition,
    validate,
)
from .game import AggregationGame, Constant, Full, Uniform, full_from_values
from .logic import Formula, FormulaSyntaxError, format_formula, parse_formula


class GameFileError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class GameFile:
    game: AggregationGame
    constraint: Formula | None = None


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_']*$")
_RESERVED = {"top", "bot"}


def _value(text: str, line: int) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise GameFileError(f"bad number {text!r}", line) from None


def _bits(text: str, width: int, what: str, line: int) -> int:
    if len(text) != width or set(text) - {"0", "1"}:
        raise GameFileError(f"{what} must be {width} binary digits, got {text!r}", line)
    return int(text, 2)


def _names_or_count(args: list[str], what: str, line: int) -> tuple[int, tuple[str, ...] | None]:
    if not args:
        raise GameFileError(f"'{what}' needs a count or names", line)
    if len(args) == 1 and args[0].isdigit():
        return int(args[0]), None
    for a in args:
        if not _NAME.match(a) or a in _RESERVED or re.fullmatch(r"p\d+", a):
            raise GameFileError(f"invalid {what[:-1]} name {a!r}", line)
    if len(set(args)) != len(args):
        raise GameFileError(f"duplicate {what[:-1]} names", line)
    return len(args), tuple(args)


def _parse_coalition(text: str, n: int, line: int) -> frozenset:
    m = re.fullmatch(r"\{([0-9,\s]*)\}", text)
    if not m:
        raise GameFileError(f"bad coalition {text!r}", line)
    body = m.group(1).strip()
    members = [int(x) for x in body.split(",") if x.strip()] if body else []
    if any(not 1 <= x <= n for x in members):
        raise GameFileError(f"coalition {text} mentions voters outside 1..{n}", line)
    return frozenset(x - 1 for x in members)


def parse_game(text: str, cap: int | None = None) -> GameFile:
    lines = [(k, raw.split("#", 1)[0].strip()) for k, raw in enumerate(text.splitlines(), 1)]
    lines = [(k, t) for k, t in lines if t]
    n = m = None
    voter_names = issue_names = None
    agg_spec = None
    goals: dict[int, tuple[str, int]] = {}
    payoff_spec = None
    constraint = None
    pos = 0

    def voter_index(token: str, line: int) -> int:
        if n is None:
            raise GameFileError("'voters' must come first", line)
        if voter_names and token in voter_names:
            return voter_names.index(token)
        if token.isdigit() and 1 <= int(token) <= n:
            return int(token) - 1
        raise GameFileError(f"unknown voter {token!r}", line)

    while pos < len(lines):
        k, t = lines[pos]
        pos += 1
        head, _, rest = t.partition(" ")
        rest = rest.strip()
        args = rest.split()
        if head == "voters":
            if n is not None:
                raise GameFileError("'voters' given twice", k)
            n, voter_names = _names_or_count(args, "voters", k)
            if n < 3 or n % 2 == 0:
                raise GameFileError(f"voter count must be odd and >= 3, got {n}", k)
        elif head == "issues":
            if m is not None:
                raise GameFileError("'issues' given twice", k)
            m, issue_names = _names_or_count(args, "issues", k)
            if m < 1:
                raise GameFileError("need at least one issue", k)
        elif head == "aggregator":
            if agg_spec is not None:
                raise GameFileError("'aggregator' given twice", k)
            agg_spec = (args, k)
        elif head == "goal":
            if not args:
                raise GameFileError("'goal' needs a voter and a formula", k)
            who = voter_index(args[0], k)
            if who in goals:
                raise GameFileError(f"second goal for voter {who + 1}", k)
            formula = rest[len(args[0]):].strip()
            if not formula:
                raise GameFileError("missing goal formula", k)
            goals[who] = (formula, k)
        elif head == "payoffs":
            if payoff_spec is not None:
                raise GameFileError("'payoffs' given twice", k)
            kind = args[0] if args else ""
            if kind == "constant":
                payoff_spec = ("constant", args[1:], k)
            elif kind in ("uniform", "full"):
                if len(args) != 1:
                    raise GameFileError(f"'payoffs {kind}' opens a block; entries go on later lines", k)
                block = []
                while True:
                    if pos >= len(lines):
                        raise GameFileError(f"unterminated 'payoffs {kind}' block", k)
                    bk, bt = lines[pos]
                    pos += 1
                    if bt == "end":
                        break
                    block.append((bk, bt.split()))
                payoff_spec = (kind, block, k)
            else:
                raise GameFileError("payoffs must be constant, uniform or full", k)
        elif head == "constraint":
            if constraint is not None:
                raise GameFileError("'constraint' given twice", k)
            constraint = (rest, k)
        else:
            raise GameFileError(f"unknown directive {head!r}", k)

    if n is None or m is None:
        raise GameFileError("'voters' and 'issues' are required")
    structure = BAStructure(n, m, issue_names, voter_names)

    def formula(text: str, line: int) -> Formula:
        try:
            return parse_formula(text, issue_names, m)
        except FormulaSyntaxError as exc:
            raise GameFileError(f"{exc} (column {exc.pos + 1})", line) from None
        except ValueError as exc:
            raise GameFileError(str(exc), line) from None

    if agg_spec is None:
        raise GameFileError("'aggregator' is required")
    args, k = agg_spec
    if args == ["majority"]:
        agg = Majority()
    elif args and args[0] == "quota":
        if len(args) - 1 != m or not all(a.isdigit() for a in args[1:]):
            raise GameFileError(f"quota needs {m} integer thresholds", k)
        agg = Quota(tuple(int(a) for a in args[1:]))
    elif args and args[0] == "coalitions":
        body = " ".join(args[1:])
        found = re.findall(r"\{[^}]*\}", body)
        if re.sub(r"\{[^}]*\}", "", body).strip():
            raise GameFileError("coalitions are written like {1,2}", k)
        agg = ExplicitFamily(frozenset(_parse_coalition(c, n, k) for c in found))
    else:
        raise GameFileError("aggregator must be majority, quota or coalitions", k)
    try:
        validate(agg, structure)
    except ValueError as exc:
        raise GameFileError(str(exc), k) from None

    parsed = {i: formula(*goals[i]) for i in sorted(goals)}
    missing = [i + 1 for i in range(n) if i not in parsed]
    if missing:
        raise GameFileError(f"no goal for voters {missing}")
    goal_formulas = tuple(parsed[i] for i in range(n))

    if payoff_spec is None:
        raise GameFileError("'payoffs' is required")
    payoffs = _payoffs(payoff_spec, structure, voter_index)

    ic = formula(*constraint) if constraint else None
    kw = {} if cap is None else {"cap": cap}
    return GameFile(AggregationGame(structure, agg, goal_formulas, payoffs, **kw), ic)


def _payoffs(spec, s: BAStructure, voter_index):
    kind, body, k = spec
    if kind == "constant":
        if len(body) != s.n:
            raise GameFileError(f"{s.n} constant payoffs expected, got {len(body)}", k)
        return Constant(tuple(_value(v, k) for v in body))
    if kind == "uniform":
        default = None
        table: dict[tuple[int, int], Fraction] = {}
        for bk, parts in body:
            if parts[0] == "default" and len(parts) == 2:
                default = _value(parts[1], bk)
                continue
            if len(parts) != 3:
                raise GameFileError("expected 'voter outcome value'", bk)
            key = (voter_index(parts[0], bk), _bits(parts[1], s.m, "outcome", bk))
            if key in table:
                raise GameFileError("duplicate payoff entry", bk)
            table[key] = _value(parts[2], bk)
        rows = []
        for i in range(s.n):
            row = []
            for o in range(s.n_ballots):
                if (i, o) not in table and default is None:
                    raise GameFileError(
                        f"no payoff for voter {i + 1} at outcome {o:0{s.m}b} and no default", k
                    )
                row.append(table.get((i, o), default))
            rows.append(tuple(row))
        return Uniform(tuple(rows))
    base = None
    entries: dict[tuple[int, int], Fraction] = {}
    for bk, parts in body:
        if parts[0] == "base":
            if len(parts) != s.n + 1:
                raise GameFileError(f"'base' needs {s.n} values", bk)
            base = Constant(tuple(_value(v, bk) for v in parts[1:]))
            continue
        if len(parts) != 3:
            raise GameFileError("expected 'voter profile value'", bk)
        key = (voter_index(parts[0], bk), _bits(parts[1], s.n * s.m, "profile", bk))
        if key in entries:
            raise GameFileError("duplicate payoff entry", bk)
        entries[key] = _value(parts[2], bk)
    if base is None:
        base = Constant(tuple(Fraction(0) for _ in range(s.n)))
    return full_from_values(base, s, entries)


def load_game(path: str | Path, cap: int | None = None) -> GameFile:
    return parse_game(Path(path).read_text(), cap)


def _num(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def write_game(gf: GameFile | AggregationGame, constraint: Formula | None = None) -> str:
    """Canonical text of a game; parsing it gives back an equal game."""
    if isinstance(gf, GameFile):
        game, constraint = gf.game, gf.constraint
    else:
        game = gf
    s = game.structure
    names = s.issue_names
    who = s.voter_label
    out = [
        "voters " + (" ".join(s.voter_names) if s.voter_names else str(s.n)),
        "issues " + (" ".join(names) if names else str(s.m)),
    ]
    agg = game.aggregator
    if isinstance(agg, Majority):
        out.append("aggregator majority")
    elif isinstance(agg, Quota):
        out.append("aggregator quota " + " ".join(map(str, agg.thresholds)))
    elif isinstance(agg, ExplicitFamily):
        fam = sorted(agg.family, key=lambda c: (len(c), sorted(c)))
        out.append(" ".join(["aggregator coalitions"] + [format_coalition(c) for c in fam]))
    elif isinstance(agg, GeneralTable):
        raise GameFileError("table aggregators have no file syntax")
    for i, g in enumerate(game.goals):
        out.append(f"goal {who(i)} {format_formula(g, names)}")
    table = game.payoffs
    if isinstance(table, Constant):
        out.append("payoffs constant " + " ".join(_num(v) for v in table.values))
    elif isinstance(table, Uniform):
        out.append("payoffs uniform")
        flat = [v for row in table.values for v in row]
        default = max(sorted(set(flat)), key=flat.count)
        out.append(f"  default {_num(default)}")
        for i, row in enumerate(table.values):
            for o, v in enumerate(row):
                if v != default:
                    out.append(f"  {who(i)} {o:0{s.m}b} {_num(v)}")
        out.append("end")
    else:
        if not isinstance(table.base, Constant):
            raise GameFileError("full tables are written over a constant base")
        out.append("payoffs full")
        out.append("  base " + " ".join(_num(v) for v in table.base.values))
        width = s.n * s.m
        for i, p in zip(*np.nonzero(table.delta)):
            v = table.base.values[i] + table.value(int(i), int(p))
            out.append(f"  {who(int(i))} {int(p):0{width}b} {_num(v)}")
        out.append("end")
    if constraint is not None:
        out.append(f"constraint {format_formula(constraint, names)}")
    return "\n".join(out) + "\n"


def parse_profile(text: str, structure: BAStructure) -> Profile:
    """Profile from ``"101 110 000"``, ``"101,110,000"`` or ``"101110000"``."""
    s = structure
    compact = re.sub(r"[\s,;/]+", "", text)
    bad = re.search(r"[^01]", compact)
    if bad:
        raise GameFileError(f"profile: unexpected character {bad.group()!r} at position {text.index(bad.group()) + 1}")
    if len(compact) != s.n * s.m:
        raise GameFileError(f"profile: expected {s.n * s.m} bits ({s.n} ballots of {s.m}), got {len(compact)}")
    chunks = re.split(r"[\s,;/]+", text.strip())
    if len(chunks) > 1 and any(len(c) != s.m for c in chunks):
        raise GameFileError(f"profile: every ballot must have {s.m} bits")
    return tuple(
        tuple(int(c) for c in compact[i * s.m:(i + 1) * s.m]) for i in range(s.n)
    )


def format_profile(profile: Sequence[Sequence[int]]) -> str:
    return " ".join("".join(map(str, b)) for b in profile)


def bundled(name: str) -> Path:
    """Path of a game file shipped with the package."""
    return Path(__file__).with_name("data") / f"{name}.game"


def bundled_names() -> list[str]:
    return sorted(p.stem for p in (Path(__file__).with_name("data")).glob("*.game"))

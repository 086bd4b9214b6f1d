"""Propositional language over issue atoms.

Atoms are 0-based internally and printed 1-based (``p1``..``pm``) unless the
caller supplies issue names. The ASCII grammar, loosest binding first::

    formula  := implies
    implies  := or ( "->" implies )?
    or       := and ( "|" or )?
    and      := unary ( "&" and )?
    unary    := "!" unary | atom | "top" | "bot" | "(" formula ")"
    atom     := "p" digits | declared issue name

Binary connectives associate to the right.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

DEFAULT_CAP = 20


class FormulaSyntaxError(ValueError):
    """Raised on malformed formula text; ``pos`` is the 0-based offset."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class NotACubeError(ValueError):
    pass


class CapExceededError(ValueError):
    pass


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Atom:
    index: int


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


Formula = Union[Top, Bot, Atom, Not, And, Or, Implies]
TOP = Top()
BOT = Bot()


def conj(parts: Sequence[Formula]) -> Formula:
    """Right-nested conjunction; the empty conjunction is ``top``."""
    if not parts:
        return TOP
    out = parts[-1]
    for f in reversed(parts[:-1]):
        out = And(f, out)
    return out


def xor_all(atoms: Sequence[int]) -> Formula:
    """Formula true iff an odd number of the given atoms are true."""
    if not atoms:
        return BOT
    out: Formula = Atom(atoms[0])
    for a in atoms[1:]:
        x = Atom(a)
        out = Or(And(out, Not(x)), And(Not(out), x))
    return out


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(->)|([!&|()])|([A-Za-z_][A-Za-z0-9_']*))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN.match(text, pos)
        if match is None:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[start]!r}", start)
        tok = match.group(1) or match.group(2) or match.group(3)
        tokens.append((tok, match.start(match.lastindex)))
        pos = match.end()
    tokens.append(("", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, names: Mapping[str, int], m: int | None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = names
        self.m = m

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def pos(self) -> int:
        return self.tokens[self.i][1]

    def take(self, tok: str) -> None:
        if self.peek() != tok:
            found = self.peek() or "end of input"
            raise FormulaSyntaxError(f"expected {tok!r}, found {found!r}", self.pos())
        self.i += 1

    def formula(self) -> Formula:
        left = self.disj()
        if self.peek() == "->":
            self.i += 1
            return Implies(left, self.formula())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        if self.peek() == "|":
            self.i += 1
            return Or(left, self.disj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        if self.peek() == "&":
            self.i += 1
            return And(left, self.conj())
        return left

    def unary(self) -> Formula:
        tok, pos = self.tokens[self.i]
        if tok == "!":
            self.i += 1
            return Not(self.unary())
        if tok == "(":
            self.i += 1
            inner = self.formula()
            self.take(")")
            return inner
        if tok == "":
            raise FormulaSyntaxError("unexpected end of input", pos)
        if tok in ("->", "&", "|", ")"):
            raise FormulaSyntaxError(f"unexpected {tok!r}", pos)
        self.i += 1
        if tok == "top":
            return TOP
        if tok == "bot":
            return BOT
        return Atom(self.resolve(tok, pos))

    def resolve(self, name: str, pos: int) -> int:
        if name in self.names:
            index = self.names[name]
        elif re.fullmatch(r"p[1-9][0-9]*", name):
            index = int(name[1:]) - 1
        else:
            raise FormulaSyntaxError(f"unknown issue {name!r}", pos)
        if self.m is not None and index >= self.m:
            raise FormulaSyntaxError(f"issue {name!r} out of range 1..{self.m}", pos)
        return index


def parse_formula(
    text: str, issue_names: Sequence[str] | None = None, m: int | None = None
) -> Formula:
    """Parse ``text`` into a formula AST.

    ``issue_names`` declares aliases for ``p1``..``pm`` in order. When ``m`` is
    given (or implied by the names) atoms beyond it are rejected.
    """
    names = {name: k for k, name in enumerate(issue_names or ())}
    if m is None and issue_names:
        m = len(issue_names)
    parser = _Parser(text, names, m)
    result = parser.formula()
    if parser.peek() != "":
        raise FormulaSyntaxError(f"unexpected {parser.peek()!r}", parser.pos())
    return result


# -- printing --------------------------------------------------------------

_PREC = {Implies: 1, Or: 2, And: 3}
_SYMBOL = {Implies: "->", Or: "|", And: "&"}


def format_formula(f: Formula, issue_names: Sequence[str] | None = None) -> str:
    """Canonical text for ``f``; ``parse_formula`` maps it back to ``f``."""

    def atom(k: int) -> str:
        return issue_names[k] if issue_names else f"p{k + 1}"

    def go(g: Formula, ctx: int) -> str:
        if isinstance(g, Top):
            return "top"
        if isinstance(g, Bot):
            return "bot"
        if isinstance(g, Atom):
            return atom(g.index)
        if isinstance(g, Not):
            return "!" + go(g.arg, 4)
        prec = _PREC[type(g)]
        # right operand may share the level (right associativity)
        text = f"{go(g.left, prec + 1)} {_SYMBOL[type(g)]} {go(g.right, prec)}"
        return f"({text})" if prec < ctx else text

    return go(f, 0)


# -- semantics -------------------------------------------------------------


def max_atom(f: Formula) -> int:
    """Largest atom index in ``f`` or -1 when it has none."""
    if isinstance(f, Atom):
        return f.index
    if isinstance(f, Not):
        return max_atom(f.arg)
    if isinstance(f, (And, Or, Implies)):
        return max(max_atom(f.left), max_atom(f.right))
    return -1


def satisfies(ballot: Sequence[int], f: Formula) -> bool:
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Atom):
        if not 0 <= f.index < len(ballot):
            raise IndexError(f"atom p{f.index + 1} outside ballot of length {len(ballot)}")
        return ballot[f.index] == 1
    if isinstance(f, Not):
        return not satisfies(ballot, f.arg)
    if isinstance(f, And):
        return satisfies(ballot, f.left) and satisfies(ballot, f.right)
    if isinstance(f, Or):
        return satisfies(ballot, f.left) or satisfies(ballot, f.right)
    if isinstance(f, Implies):
        return (not satisfies(ballot, f.left)) or satisfies(ballot, f.right)
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class GoalCube:
    """Conjunction of literals as a map issue -> required value (1 or 0)."""

    literals: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        issues = [k for k, _ in self.literals]
        if len(set(issues)) != len(issues):
            raise ValueError("cube mentions an issue twice")
        object.__setattr__(self, "literals", tuple(sorted(self.literals)))

    @classmethod
    def of(cls, mapping: Mapping[int, int]) -> "GoalCube":
        return cls(tuple(mapping.items()))

    def as_dict(self) -> dict[int, int]:
        return dict(self.literals)

    def holds(self, ballot: Sequence[int]) -> bool:
        return all(ballot[k] == v for k, v in self.literals)

    def formula(self) -> Formula:
        return conj([Atom(k) if v else Not(Atom(k)) for k, v in self.literals])


def as_cube(f: Formula) -> GoalCube:
    """Literal map of ``f`` if it is syntactically a cube, else NotACubeError."""
    literals: dict[int, int] = {}

    def collect(g: Formula) -> None:
        if isinstance(g, And):
            collect(g.left)
            collect(g.right)
            return
        if isinstance(g, Atom):
            k, v = g.index, 1
        elif isinstance(g, Not) and isinstance(g.arg, Atom):
            k, v = g.arg.index, 0
        else:
            raise NotACubeError(f"{format_formula(g)} is not a literal")
        if k in literals:
            raise NotACubeError(f"issue p{k + 1} occurs twice")
        literals[k] = v

    if isinstance(f, Top):
        return GoalCube()
    collect(f)
    return GoalCube.of(literals)


def try_cube(f: Formula) -> GoalCube | None:
    try:
        return as_cube(f)
    except NotACubeError:
        return None


def cubes_consistent(cubes: Iterable[GoalCube], m: int) -> tuple[int, ...] | None:
    """Witness ballot satisfying every cube (free issues set to 0), or None."""
    required: dict[int, int] = {}
    for cube in cubes:
        for k, v in cube.literals:
            if required.setdefault(k, v) != v:
                return None
    return tuple(required.get(k, 0) for k in range(m))


def all_ballots(m: int) -> list[tuple[int, ...]]:
    """All ballots of length ``m`` in increasing binary order."""
    return [tuple(bits) for bits in itertools.product((0, 1), repeat=m)]


def models_of(f: Formula, m: int, cap: int = DEFAULT_CAP) -> list[tuple[int, ...]]:
    if m > cap:
        raise CapExceededError(f"2^{m} ballots exceed the cap 2^{cap}")
    if max_atom(f) >= m:
        raise IndexError(f"formula mentions p{max_atom(f) + 1} but m={m}")
    return [b for b in all_ballots(m) if satisfies(b, f)]


def entails(f: Formula, g: Formula, m: int, cap: int = DEFAULT_CAP) -> bool:
    return all(satisfies(b, g) for b in models_of(f, m, cap))

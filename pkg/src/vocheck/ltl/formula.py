"""LTL formulas over state predicates, enabledness and executed events.

Concrete syntax::

    {expr}          state predicate over variables and constants
    e(ev)           some binding of event ev is enabled
    ev, [ev]        the next transition executes ev
    [ev] phi        after every ev, phi holds  ==  G([ev] => phi)
    not, and, or, =>, <=>, X, G, F, U, R, true, false, ( )

Paths alternate states and transitions; position i is state s_i together
with the transition leaving it, so ``X`` moves to the next state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from ..errors import LtlSyntaxError, ModelError
from ..model.ast import Expr, show
from ..model.lexer import KEYWORDS, tokenize
from ..model.parser import ExprParser, TokenStream


@dataclass(frozen=True)
class BoolConst:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class StatePred:
    expr: Expr

    def __str__(self) -> str:
        return "{" + show(self.expr) + "}"


@dataclass(frozen=True)
class Enabled:
    event: str

    def __str__(self) -> str:
        return f"e({self.event})"


@dataclass(frozen=True)
class Executed:
    event: str

    def __str__(self) -> str:
        return f"[{self.event}]"


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self) -> str:
        return f"not({self.arg})"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} or {self.right})"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} => {self.right})"


@dataclass(frozen=True)
class Next:
    arg: "Formula"

    def __str__(self) -> str:
        return f"X({self.arg})"


@dataclass(frozen=True)
class Globally:
    arg: "Formula"

    def __str__(self) -> str:
        return f"G({self.arg})"


@dataclass(frozen=True)
class Finally:
    arg: "Formula"

    def __str__(self) -> str:
        return f"F({self.arg})"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} U {self.right})"


@dataclass(frozen=True)
class Release:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} R {self.right})"


@dataclass(frozen=True)
class After:
    """``[ev] phi``: whenever ev is executed, phi holds at that position."""

    event: str
    arg: "Formula"

    def __str__(self) -> str:
        return f"[{self.event}] {self.arg}"


Atom = Union[StatePred, Enabled, Executed]
Formula = Union[BoolConst, StatePred, Enabled, Executed, Not, And, Or, Implies, Next, Globally,
                Finally, Until, Release, After]
ATOMS = (StatePred, Enabled, Executed)
TRUE = BoolConst(True)
FALSE = BoolConst(False)

_UNARY = {"X": Next, "G": Globally, "F": Finally}
_RESERVED = {"X", "G", "F", "U", "R", "e", "not", "and", "or", "true", "false"}


# -- parsing -----------------------------------------------------------------

class _LtlParser:
    def __init__(self, text: str):
        try:
            toks = tokenize(text, "<ltl>")
        except ModelError as exc:
            d = exc.diagnostics[0]
            raise LtlSyntaxError(d.message, _offset(text, d.line, d.col)) from None
        self.ts = TokenStream(toks, "<ltl>")
        self.text = text

    def fail(self, msg: str):
        t = self.ts.tok
        found = t.text or "end of input"
        raise LtlSyntaxError(f"{msg} (found {found!r})", t.offset)

    def parse(self) -> Formula:
        f = self.implication()
        if self.ts.tok.kind != "EOF":
            self.fail("unexpected trailing input")
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.ts.at("=>"):
            self.ts.next()
            return Implies(left, self.implication())
        if self.ts.at("<=>"):
            self.ts.next()
            right = self.implication()
            return And(Implies(left, right), Implies(right, left))
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.ts.at("or"):
            self.ts.next()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.binary_temporal()
        while self.ts.at("and", "&"):
            self.ts.next()
            left = And(left, self.binary_temporal())
        return left

    def binary_temporal(self) -> Formula:
        left = self.unary()
        if self.ts.tok.kind == "IDENT" and self.ts.tok.text in ("U", "R"):
            op = self.ts.next().text
            right = self.binary_temporal()
            return Until(left, right) if op == "U" else Release(left, right)
        return left

    def _starts_formula(self) -> bool:
        t = self.ts.tok
        if t.kind == "IDENT":
            return t.text not in ("U", "R", "and", "or")
        return t.kind == "OP" and t.text in ("(", "{", "[")

    def unary(self) -> Formula:
        ts = self.ts
        if ts.at("not"):
            ts.next()
            return Not(self.unary())
        if ts.tok.kind == "IDENT" and ts.tok.text in _UNARY:
            op = ts.next().text
            return _UNARY[op](self.unary())
        if ts.at("["):
            ts.next()
            ev = self.event_name()
            if not ts.at("]"):
                self.fail("expected ']'")
            ts.next()
            if self._starts_formula():
                return After(ev, self.unary())
            return Executed(ev)
        return self.primary()

    def event_name(self) -> str:
        t = self.ts.tok
        if t.kind != "IDENT" or t.text in KEYWORDS or t.text in _RESERVED:
            self.fail("expected event name")
        return self.ts.next().text

    def primary(self) -> Formula:
        ts = self.ts
        t = ts.tok
        if ts.at("("):
            ts.next()
            f = self.implication()
            if not ts.at(")"):
                self.fail("expected ')'")
            ts.next()
            return f
        if ts.at("{"):
            ts.next()
            try:
                expr = ExprParser(ts).expr()
            except ModelError as exc:
                d = exc.diagnostics[0]
                raise LtlSyntaxError(d.message, _offset(self.text, d.line, d.col)) from None
            if not ts.at("}"):
                self.fail("expected '}' closing the state predicate")
            ts.next()
            return StatePred(expr)
        if t.kind == "IDENT":
            if t.text in ("true", "TRUE"):
                ts.next()
                return TRUE
            if t.text in ("false", "FALSE"):
                ts.next()
                return FALSE
            if t.text == "e" and ts.peek().text == "(":
                ts.next()
                ts.next()
                ev = self.event_name()
                if not ts.at(")"):
                    self.fail("expected ')'")
                ts.next()
                return Enabled(ev)
            if ts.peek().kind == "OP" and ts.peek().text == "(":
                self.fail(f"unknown operator {t.text!r}")
            if t.text in KEYWORDS or t.text in _RESERVED:
                self.fail("unexpected keyword")
            ts.next()
            return Executed(t.text)
        self.fail("expected formula")
        raise AssertionError  # unreachable


def _offset(text: str, line: int, col: int) -> int:
    lines = text.split("\n")
    return sum(len(x) + 1 for x in lines[: line - 1]) + col - 1


def parse_ltl(text: str) -> Formula:
    """Parse LTL concrete syntax; raises :class:`LtlSyntaxError` with an offset."""
    return _LtlParser(text).parse()


# -- rewriting ---------------------------------------------------------------

def desugar(f: Formula) -> Formula:
    """Eliminate ``=>``, ``F``, ``G`` and ``[ev] phi``."""
    if isinstance(f, (BoolConst, *ATOMS)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.arg))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, Implies):
        return Or(Not(desugar(f.left)), desugar(f.right))
    if isinstance(f, Next):
        return Next(desugar(f.arg))
    if isinstance(f, Finally):
        return Until(TRUE, desugar(f.arg))
    if isinstance(f, Globally):
        return Release(FALSE, desugar(f.arg))
    if isinstance(f, Until):
        return Until(desugar(f.left), desugar(f.right))
    if isinstance(f, Release):
        return Release(desugar(f.left), desugar(f.right))
    if isinstance(f, After):
        return Release(FALSE, Or(Not(Executed(f.event)), desugar(f.arg)))
    raise TypeError(f)


def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, BoolConst):
        return BoolConst(f.value != neg)
    if isinstance(f, ATOMS):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.arg, not neg)
    if isinstance(f, And):
        cls = Or if neg else And
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Or):
        cls = And if neg else Or
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Next):
        return Next(_nnf(f.arg, neg))
    if isinstance(f, Until):
        cls = Release if neg else Until
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Release):
        cls = Until if neg else Release
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    raise TypeError(f)


def normalize(f: Formula) -> Formula:
    """Negation normal form over ``and/or/X/U/R`` with negation only on atoms."""
    return _nnf(desugar(f), False)


def is_nnf(f: Formula) -> bool:
    if isinstance(f, (BoolConst, *ATOMS)):
        return True
    if isinstance(f, Not):
        return isinstance(f.arg, ATOMS)
    if isinstance(f, (And, Or, Until, Release)):
        return is_nnf(f.left) and is_nnf(f.right)
    if isinstance(f, Next):
        return is_nnf(f.arg)
    return False


# -- inspection --------------------------------------------------------------

def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Next, Globally, Finally, After)):
        return (f.arg,)
    if isinstance(f, (And, Or, Implies, Until, Release)):
        return (f.left, f.right)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    for c in children(f):
        yield from subformulas(c)


def atoms(f: Formula) -> list[Atom]:
    """Distinct atoms in first-occurrence order (``[ev] phi`` contributes
    ``Executed(ev)``)."""
    out: dict = {}
    for g in subformulas(f):
        if isinstance(g, ATOMS):
            out.setdefault(g, None)
        elif isinstance(g, After):
            out.setdefault(Executed(g.event), None)
    return list(out)


def temporal_depth(f: Formula) -> int:
    inner = max((temporal_depth(c) for c in children(f)), default=0)
    if isinstance(f, (Next, Globally, Finally, Until, Release, After)):
        return inner + 1
    return inner


def event_names(f: Formula) -> set[str]:
    return {a.event for a in atoms(f) if isinstance(a, (Enabled, Executed))}

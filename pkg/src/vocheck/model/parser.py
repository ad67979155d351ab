"""Recursive-descent parser for ``.ebs`` model files and bare expressions.

Grammar (informal)::

    context C [extends C0]
      sets S = {e1, e2} ...
      constants c : T [= expr] ...
      axioms @axm1 expr ...
    end

    machine M [refines M0] [sees C1, C2]
      variables v : T ...
      invariants @inv1 expr ...
      init [then] @act1 v := expr ... end
      event E [extends E0] [any p : T ...] [where @grd1 expr ...] [then @act1 v := expr ...] end
    end

Types: ``BOOL``, ``lo..hi``, a carrier-set name, ``POW(T)``, ``T --> T``
(total function) and ``T +-> T`` (partial function).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import Diagnostic, ModelError
from .ast import (INIT, Action, Apply, Binary, Builtin, Expr, Labeled,
                  Lit, Name, Pos, SetLit, Unary)
from .lexer import KEYWORDS, Token, tokenize
from .types import BOOL, FuncType, IntRange, PowType

_CMP = {"=", "/=", "<", "<=", ">", ">=", "in", "/:"}


# Unresolved type syntax; resolved against carrier sets during project build.
@dataclass(frozen=True)
class TypeName:
    name: str
    pos: Pos | None = field(default=None, compare=False)


@dataclass
class RawContext:
    name: str
    extends: str | None
    sets: list[tuple[str, tuple[str, ...], Pos]]
    constants: list[tuple[str, Any, Expr | None, Pos]]
    axioms: list[Labeled]
    pos: Pos


@dataclass
class RawEvent:
    name: str
    extends: str | None
    params: list[tuple[str, Any, Pos]]
    guards: list[Labeled]
    actions: list[Action]
    pos: Pos


@dataclass
class RawMachine:
    name: str
    refines: str | None
    sees: list[str]
    variables: list[tuple[str, Any, Pos]]
    invariants: list[Labeled]
    init: RawEvent | None
    events: list[RawEvent]
    pos: Pos


class TokenStream:
    def __init__(self, toks: list[Token], file: str | None = None):
        self.toks = toks
        self.i = 0
        self.file = file

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def pos(self, t: Token | None = None) -> Pos:
        t = t or self.tok
        return Pos(self.file, t.line, t.col)

    def error(self, msg: str, t: Token | None = None) -> ModelError:
        t = t or self.tok
        found = t.text or "end of input"
        return ModelError(Diagnostic(f"{msg} (found {found!r})", self.file, t.line, t.col))

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("OP", "IDENT") and self.tok.text in texts

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "IDENT" or t.text in KEYWORDS:
            raise self.error(f"expected {what}")
        return self.next()

    def at_name(self) -> bool:
        return self.tok.kind == "IDENT" and self.tok.text not in KEYWORDS


class ExprParser:
    """Precedence climbing over a shared :class:`TokenStream`."""

    def __init__(self, ts: TokenStream):
        self.ts = ts

    def expr(self) -> Expr:
        return self.implication()

    def implication(self) -> Expr:
        left = self.disjunction()
        if self.ts.at("=>", "<=>"):
            t = self.ts.next()
            right = self.implication()
            return Binary(t.text, left, right, pos=self.ts.pos(t))
        return left

    def disjunction(self) -> Expr:
        left = self.conjunction()
        while self.ts.at("or"):
            t = self.ts.next()
            left = Binary("or", left, self.conjunction(), pos=self.ts.pos(t))
        return left

    def conjunction(self) -> Expr:
        left = self.negation()
        while self.ts.at("and", "&"):
            t = self.ts.next()
            left = Binary("and", left, self.negation(), pos=self.ts.pos(t))
        return left

    def negation(self) -> Expr:
        if self.ts.at("not"):
            t = self.ts.next()
            return Unary("not", self.negation(), pos=self.ts.pos(t))
        return self.comparison()

    def comparison(self) -> Expr:
        left = self.override()
        if self.ts.tok.kind in ("OP", "IDENT") and self.ts.tok.text in _CMP:
            t = self.ts.next()
            op = {"/:": "notin"}.get(t.text, t.text)
            right = self.override()
            return Binary(op, left, right, pos=self.ts.pos(t))
        return left

    def override(self) -> Expr:
        left = self.maplet()
        while self.ts.at("<+"):
            t = self.ts.next()
            left = Binary("<+", left, self.maplet(), pos=self.ts.pos(t))
        return left

    def maplet(self) -> Expr:
        left = self.interval()
        while self.ts.at("|->"):
            t = self.ts.next()
            left = Binary("|->", left, self.interval(), pos=self.ts.pos(t))
        return left

    def interval(self) -> Expr:
        left = self.additive()
        if self.ts.at(".."):
            t = self.ts.next()
            return Binary("..", left, self.additive(), pos=self.ts.pos(t))
        return left

    def additive(self) -> Expr:
        left = self.multiplicative()
        while self.ts.at("+", "-"):
            t = self.ts.next()
            left = Binary(t.text, left, self.multiplicative(), pos=self.ts.pos(t))
        return left

    def multiplicative(self) -> Expr:
        left = self.unary()
        while self.ts.at("*"):
            t = self.ts.next()
            left = Binary("*", left, self.unary(), pos=self.ts.pos(t))
        return left

    def unary(self) -> Expr:
        if self.ts.at("-"):
            t = self.ts.next()
            operand = self.unary()
            if isinstance(operand, Lit) and isinstance(operand.value, int) and not isinstance(operand.value, bool):
                return Lit(-operand.value, pos=self.ts.pos(t))
            return Unary("neg", operand, pos=self.ts.pos(t))
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while self.ts.at("("):
            t = self.ts.next()
            arg = self.expr()
            self.ts.expect(")")
            e = Apply(e, arg, pos=self.ts.pos(t))
        return e

    def primary(self) -> Expr:
        ts = self.ts
        t = ts.tok
        if t.kind == "INT":
            ts.next()
            return Lit(int(t.text), pos=ts.pos(t))
        if t.kind == "IDENT":
            if t.text in ("TRUE", "true"):
                ts.next()
                return Lit(True, pos=ts.pos(t))
            if t.text in ("FALSE", "false"):
                ts.next()
                return Lit(False, pos=ts.pos(t))
            if t.text in ("dom", "ran", "card"):
                ts.next()
                ts.expect("(")
                arg = self.expr()
                ts.expect(")")
                return Builtin(t.text, arg, pos=ts.pos(t))
            if t.text == "BOOL" or t.text not in KEYWORDS:
                ts.next()
                return Name(t.text, pos=ts.pos(t))
        if ts.at("("):
            ts.next()
            e = self.expr()
            ts.expect(")")
            return e
        if ts.at("{"):
            ts.next()
            items: list[Expr] = []
            if not ts.at("}"):
                items.append(self.expr())
                while ts.at(","):
                    ts.next()
                    items.append(self.expr())
            ts.expect("}")
            return SetLit(tuple(items), pos=ts.pos(t))
        raise ts.error("expected expression")


def parse_expr(text: str, file: str | None = None, line: int = 1, col: int = 1) -> Expr:
    ts = TokenStream(tokenize(text, file, line, col), file)
    e = ExprParser(ts).expr()
    if ts.tok.kind != "EOF":
        raise ts.error("unexpected trailing input")
    return e


# -- types -------------------------------------------------------------------

def parse_type(ts: TokenStream):
    left = _atype(ts)
    if ts.at("-->", "+->"):
        t = ts.next()
        right = parse_type(ts)
        return FuncType(left, right, total=t.text == "-->")
    return left


def _signed_int(ts: TokenStream) -> int:
    neg = False
    if ts.at("-"):
        ts.next()
        neg = True
    if ts.tok.kind != "INT":
        raise ts.error("expected integer")
    v = int(ts.next().text)
    return -v if neg else v


def _atype(ts: TokenStream):
    if ts.at("BOOL"):
        ts.next()
        return BOOL
    if ts.at("POW"):
        ts.next()
        ts.expect("(")
        inner = parse_type(ts)
        ts.expect(")")
        return PowType(inner)
    if ts.at("("):
        ts.next()
        inner = parse_type(ts)
        ts.expect(")")
        return inner
    if ts.tok.kind == "INT" or ts.at("-"):
        lo = _signed_int(ts)
        ts.expect("..")
        hi = _signed_int(ts)
        return IntRange(lo, hi)
    if ts.at_name():
        t = ts.next()
        return TypeName(t.text, ts.pos(t))
    raise ts.error("expected type")


# -- files -------------------------------------------------------------------

def _labeled_list(ts: TokenStream, ep: ExprParser) -> list[Labeled]:
    out = []
    while ts.tok.kind == "LABEL":
        t = ts.next()
        out.append(Labeled(t.text, ep.expr(), pos=ts.pos(t)))
    return out


def _actions(ts: TokenStream, ep: ExprParser) -> list[Action]:
    out = []
    while ts.tok.kind == "LABEL":
        t = ts.next()
        var = ts.ident("assigned variable")
        ts.expect(":=")
        out.append(Action(t.text, var.text, ep.expr(), pos=ts.pos(t)))
    return out


def _event_body(ts: TokenStream, ep: ExprParser, name: str, pos: Pos, allow_extends=True) -> RawEvent:
    extends = None
    if allow_extends and ts.at("extends"):
        ts.next()
        extends = ts.ident("extended event").text
    params: list = []
    guards: list[Labeled] = []
    actions: list[Action] = []
    if ts.at("any"):
        ts.next()
        while ts.at_name():
            p = ts.next()
            ts.expect(":")
            params.append((p.text, parse_type(ts), ts.pos(p)))
        if not params:
            raise ts.error("expected parameter declaration after 'any'")
    if ts.at("where"):
        ts.next()
        guards = _labeled_list(ts, ep)
    if ts.at("then"):
        ts.next()
        actions = _actions(ts, ep)
    ts.expect("end")
    return RawEvent(name, extends, params, guards, actions, pos)


def _parse_context(ts: TokenStream, ep: ExprParser) -> RawContext:
    start = ts.expect("context")
    name = ts.ident("context name").text
    extends = None
    if ts.at("extends"):
        ts.next()
        extends = ts.ident("extended context").text
    sets, constants, axioms = [], [], []
    while not ts.at("end"):
        if ts.at("sets"):
            ts.next()
            while ts.at_name():
                s = ts.next()
                ts.expect("=")
                ts.expect("{")
                elems = [ts.ident("set element").text]
                while ts.at(","):
                    ts.next()
                    elems.append(ts.ident("set element").text)
                ts.expect("}")
                sets.append((s.text, tuple(elems), ts.pos(s)))
        elif ts.at("constants"):
            ts.next()
            while ts.at_name():
                c = ts.next()
                ts.expect(":")
                typ = parse_type(ts)
                value = None
                if ts.at("="):
                    ts.next()
                    value = ep.expr()
                constants.append((c.text, typ, value, ts.pos(c)))
        elif ts.at("axioms"):
            ts.next()
            axioms.extend(_labeled_list(ts, ep))
        else:
            raise ts.error("expected 'sets', 'constants', 'axioms' or 'end'")
    ts.expect("end")
    return RawContext(name, extends, sets, constants, axioms, ts.pos(start))


def _parse_machine(ts: TokenStream, ep: ExprParser) -> RawMachine:
    start = ts.expect("machine")
    name = ts.ident("machine name").text
    refines = None
    sees: list[str] = []
    if ts.at("refines"):
        ts.next()
        refines = ts.ident("refined machine").text
    if ts.at("sees"):
        ts.next()
        sees.append(ts.ident("context name").text)
        while ts.at(",") or ts.at_name():
            if ts.at(","):
                ts.next()
            sees.append(ts.ident("context name").text)
    variables, invariants, events = [], [], []
    init = None
    while not ts.at("end"):
        if ts.at("variables"):
            ts.next()
            while ts.at_name():
                v = ts.next()
                ts.expect(":")
                variables.append((v.text, parse_type(ts), ts.pos(v)))
        elif ts.at("invariants"):
            ts.next()
            invariants.extend(_labeled_list(ts, ep))
        elif ts.at("init"):
            t = ts.next()
            if init is not None:
                raise ts.error("duplicate init block", t)
            if ts.at("then"):
                ts.next()
            acts = _actions(ts, ep)
            ts.expect("end")
            init = RawEvent(INIT, None, [], [], acts, ts.pos(t))
        elif ts.at("event"):
            t = ts.next()
            ev = ts.ident("event name").text
            events.append(_event_body(ts, ep, ev, ts.pos(t)))
        else:
            raise ts.error("expected 'variables', 'invariants', 'init', 'event' or 'end'")
    ts.expect("end")
    return RawMachine(name, refines, sees, variables, invariants, init, events, ts.pos(start))


def parse_source(text: str, file: str | None = None) -> RawContext | RawMachine:
    """Parse one ``.ebs`` file holding exactly one context or machine."""
    ts = TokenStream(tokenize(text, file), file)
    ep = ExprParser(ts)
    if ts.at("context"):
        out: RawContext | RawMachine = _parse_context(ts, ep)
    elif ts.at("machine"):
        out = _parse_machine(ts, ep)
    else:
        raise ts.error("expected 'context' or 'machine'")
    if ts.tok.kind != "EOF":
        raise ts.error("one context or machine per file")
    return out

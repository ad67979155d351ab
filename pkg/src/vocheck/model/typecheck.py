"""Static typing of contexts and machines."""

from __future__ import annotations

from typing import Mapping

from ..errors import Diagnostic, ModelError
from .ast import (INIT, Apply, Binary, Builtin, Context, Event, Expr, Lit, Machine, Name,
                  Project, SetLit, Unary)
from .semantics import flatten_event
from .types import (ANY, BOOL, INT, BoolType, EnumType, FuncType, IntRange, IntType,
                    PairType, PowType, SemanticType, compatible, erase)


class TypeErr(Exception):
    def __init__(self, message: str, expr: Expr | None = None):
        super().__init__(message)
        self.expr = expr


Scope = Mapping[str, SemanticType]


def _is_int(t) -> bool:
    return isinstance(t, (IntType, IntRange, type(ANY)))


def infer(e: Expr, scope: Scope) -> SemanticType:
    """Type of ``e`` in ``scope``; raises :class:`TypeErr` on the first error."""
    if isinstance(e, Lit):
        return BOOL if isinstance(e.value, bool) else INT
    if isinstance(e, Name):
        if e.name not in scope:
            raise TypeErr(f"unknown identifier {e.name!r}", e)
        return erase(scope[e.name])
    if isinstance(e, Unary):
        t = infer(e.operand, scope)
        if e.op == "not":
            _want(t, BOOL, e.operand, "operand of 'not'")
            return BOOL
        _want_int(t, e.operand)
        return INT
    if isinstance(e, Binary):
        op = e.op
        lt = infer(e.left, scope)
        rt = infer(e.right, scope)
        if op in ("and", "or", "=>", "<=>"):
            _want(lt, BOOL, e.left, f"left operand of {op!r}")
            _want(rt, BOOL, e.right, f"right operand of {op!r}")
            return BOOL
        if op in ("=", "/="):
            if not compatible(lt, rt):
                raise TypeErr(f"cannot compare {lt} with {rt}", e)
            return BOOL
        if op in ("<", "<=", ">", ">="):
            _want_int(lt, e.left)
            _want_int(rt, e.right)
            return BOOL
        if op in ("+", "-", "*"):
            _want_int(lt, e.left)
            _want_int(rt, e.right)
            return INT
        if op == "..":
            _want_int(lt, e.left)
            _want_int(rt, e.right)
            return PowType(INT)
        if op == "|->":
            return PairType(lt, rt)
        if op in ("in", "notin"):
            if isinstance(rt, PowType):
                elem = rt.element
            elif isinstance(rt, FuncType):
                elem = PairType(rt.domain, rt.codomain)
            else:
                raise TypeErr(f"right operand of membership must be a set, got {rt}", e.right)
            if not compatible(lt, elem):
                raise TypeErr(f"element of type {lt} cannot belong to a set of {elem}", e)
            return BOOL
        if op == "<+":
            lf, rf = _as_func(lt, e.left), _as_func(rt, e.right)
            if not compatible(lf, rf):
                raise TypeErr(f"cannot override {lf} with {rf}", e)
            return lf
        raise TypeErr(f"unknown operator {op!r}", e)
    if isinstance(e, SetLit):
        if not e.items:
            return PowType(ANY)
        types = [infer(i, scope) for i in e.items]
        first = types[0]
        for i, t in zip(e.items[1:], types[1:]):
            if not compatible(first, t):
                raise TypeErr(f"set literal mixes {first} and {t}", i)
        if all(isinstance(t, PairType) for t in types):
            return FuncType(first.left, first.right, total=False)
        return PowType(first)
    if isinstance(e, Apply):
        ft = _as_func(infer(e.func, scope), e.func)
        at = infer(e.arg, scope)
        if not compatible(at, ft.domain):
            raise TypeErr(f"argument of type {at} does not match domain {ft.domain}", e.arg)
        return erase(ft.codomain)
    if isinstance(e, Builtin):
        t = infer(e.arg, scope)
        if e.name == "card":
            if not isinstance(t, (PowType, FuncType)):
                raise TypeErr(f"card expects a set, got {t}", e.arg)
            return INT
        ft = _as_func(t, e.arg)
        return PowType(ft.domain if e.name == "dom" else ft.codomain)
    raise TypeErr(f"not an expression: {e!r}")


def _as_func(t, e) -> FuncType:
    if isinstance(t, FuncType):
        return t
    if isinstance(t, PowType) and isinstance(t.element, PairType):
        return FuncType(t.element.left, t.element.right, total=False)
    if isinstance(t, PowType) and t.element == ANY:
        return FuncType(ANY, ANY, total=False)
    raise TypeErr(f"expected a function, got {t}", e)


def _want(t, expected, e, what: str):
    if not compatible(t, expected):
        raise TypeErr(f"{what} must be {expected}, got {t}", e)


def _want_int(t, e):
    if not _is_int(t):
        raise TypeErr(f"expected an integer, got {t}", e)


# -- scopes ------------------------------------------------------------------

def context_scope(contexts) -> dict[str, SemanticType]:
    scope: dict[str, SemanticType] = {"BOOL": PowType(BOOL)}
    seen = set()
    for c in contexts:
        for a in c.lineage():
            if a.name in seen:
                continue
            seen.add(a.name)
            for sname, elems in a.sets:
                et = EnumType(sname, elems)
                scope[sname] = PowType(et)
                for el in elems:
                    scope[el] = et
            for const in a.constants:
                scope[const.name] = const.type
    return scope


def machine_scope(machine: Machine) -> dict[str, SemanticType]:
    scope = context_scope(machine.all_contexts())
    for v in machine.variables:
        scope[v.name] = v.type
    return scope


def check_predicate(expr: Expr, scope: Scope) -> str | None:
    """``None`` when ``expr`` is a well-typed boolean, else an error message."""
    try:
        t = infer(expr, scope)
    except TypeErr as exc:
        return str(exc)
    if not isinstance(t, BoolType):
        return f"expected a predicate, got an expression of type {t}"
    return None


# -- project -----------------------------------------------------------------

def _d(msg: str, e: Expr | None, **kw) -> Diagnostic:
    pos = getattr(e, "pos", None)
    if pos is None:
        return Diagnostic(msg, **kw)
    return Diagnostic(msg, pos.file, pos.line, pos.col, **kw)


def typecheck_context(ctx: Context) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    scope = context_scope([ctx])
    for c in ctx.constants:
        if c.value is not None:
            try:
                t = infer(c.value, scope)
                if not compatible(t, c.type):
                    out.append(_d(f"constant {c.name!r} of type {c.type} given a value of type {t}",
                                  c.value, machine=ctx.name, label=c.name))
            except TypeErr as exc:
                out.append(_d(str(exc), exc.expr or c.value, machine=ctx.name, label=c.name))
    for ax in ctx.axioms:
        msg = check_predicate(ax.expr, scope)
        if msg:
            out.append(_d(msg, ax.expr, machine=ctx.name, label=ax.label))
    return out


def _check_event(machine: Machine, ev: Event, scope: dict, *, is_init: bool) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    local = dict(scope)
    if is_init:
        for v in machine.variables:
            local.pop(v.name, None)
    names = set()
    for p in ev.params:
        if p.name in names:
            out.append(Diagnostic(f"parameter {p.name!r} declared twice", machine=machine.name, event=ev.name))
        names.add(p.name)
        local[p.name] = p.type
    labels = set()
    for g in ev.guards:
        if g.label in labels:
            out.append(_d(f"duplicate guard label {g.label}", g.expr, machine=machine.name, event=ev.name))
        labels.add(g.label)
        msg = check_predicate(g.expr, local)
        if msg:
            out.append(_d(msg, g.expr, machine=machine.name, event=ev.name, label=g.label))
    assigned: set[str] = set()
    for a in ev.actions:
        if a.label in labels:
            out.append(_d(f"duplicate action label {a.label}", a.expr, machine=machine.name, event=ev.name))
        labels.add(a.label)
        if a.var in assigned:
            out.append(_d(f"variable {a.var!r} assigned twice", a.expr, machine=machine.name,
                          event=ev.name, label=a.label))
        assigned.add(a.var)
        try:
            target = machine.variable_type(a.var)
        except KeyError:
            out.append(_d(f"assignment to undeclared variable {a.var!r}", a.expr,
                          machine=machine.name, event=ev.name, label=a.label))
            continue
        try:
            t = infer(a.expr, local)
        except TypeErr as exc:
            out.append(_d(str(exc), exc.expr or a.expr, machine=machine.name, event=ev.name, label=a.label))
            continue
        if not compatible(t, target):
            out.append(_d(f"cannot assign a value of type {t} to {a.var!r} of type {target}", a.expr,
                          machine=machine.name, event=ev.name, label=a.label))
    if is_init:
        missing = [v.name for v in machine.variables if v.name not in assigned]
        if missing:
            out.append(Diagnostic(f"INITIALISATION does not assign {', '.join(missing)}",
                                  machine=machine.name, event=INIT))
    return out


def typecheck_machine(machine: Machine) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    scope = machine_scope(machine)
    labels = set()
    for inv in machine.invariants:
        if inv.label in labels:
            out.append(_d(f"duplicate invariant label {inv.label}", inv.expr, machine=machine.name))
        labels.add(inv.label)
        msg = check_predicate(inv.expr, scope)
        if msg:
            out.append(_d(msg, inv.expr, machine=machine.name, label=inv.label))
    if machine.init is None:
        out.append(Diagnostic("INITIALISATION required", machine=machine.name, event=INIT))
    else:
        if machine.init.guards:
            out.append(Diagnostic("INITIALISATION may not have guards", machine=machine.name, event=INIT))
        out.extend(_check_event(machine, machine.init, scope, is_init=True))
    for ev in machine.events:
        try:
            flat = flatten_event(machine, ev)
        except ModelError as exc:
            out.extend(exc.diagnostics)
            continue
        out.extend(_check_event(machine, flat, scope, is_init=False))
    return out


def typecheck(project: Project) -> list[Diagnostic]:
    """All typing diagnostics; an empty list means the project is well-typed."""
    out: list[Diagnostic] = []
    for ctx in project.contexts.values():
        out.extend(typecheck_context(ctx))
    for m in list(project.machines.values()) + list(project.derived.values()):
        out.extend(typecheck_machine(m))
    return out

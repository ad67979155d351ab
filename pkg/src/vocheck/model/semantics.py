"""Operational semantics: expression evaluation, event flattening, constant
universes, initial states, enabledness and firing."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping

from ..errors import EvaluationFault, ModelError, Diagnostic
from .ast import (INIT, Apply, Binary, Builtin, Event, Expr, Lit, Machine, Name, SetLit,
                  Unary)
from .types import (BOOL, EnumType, MapVal, SetVal, contains, enum_values, enumerate_values, make_map,
                    make_set, render)

Binding = tuple[tuple[str, Any], ...]


@dataclass(frozen=True)
class State:
    """Total assignment of the machine variables, stored sorted by name."""

    values: tuple[tuple[str, Any], ...]

    @classmethod
    def of(cls, bindings: Mapping[str, Any]) -> "State":
        return cls(tuple(sorted(bindings.items())))

    @cached_property
    def bindings(self) -> dict[str, Any]:
        return dict(self.values)

    @cached_property
    def canonical_key(self) -> str:
        return ";".join(f"{k}={render(v)}" for k, v in self.values)

    def __getitem__(self, name: str) -> Any:
        return self.bindings[name]

    def __str__(self) -> str:
        return ", ".join(f"{k}={render(v)}" for k, v in self.values)


@dataclass(frozen=True)
class Universe:
    """One valuation of a machine's constants."""

    id: str
    constants: tuple[tuple[str, Any], ...] = ()
    env: dict = field(default_factory=dict, compare=False, repr=False)


def show_binding(binding: Binding) -> str:
    return ", ".join(f"{k}={render(v)}" for k, v in binding)


def event_label(name: str, binding: Binding) -> str:
    return f"{name}({show_binding(binding)})" if binding else name


# -- evaluation --------------------------------------------------------------

def eval_expr(expr: Expr, env: Mapping[str, Any]) -> Any:
    """Evaluate ``expr`` under ``env``. ``and``/``or``/``=>`` short-circuit
    left to right, so a left-hand domain check protects the right-hand side."""
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Name):
        try:
            return env[expr.name]
        except KeyError:
            raise EvaluationFault(f"unbound name {expr.name!r}") from None
    if isinstance(expr, Unary):
        v = eval_expr(expr.operand, env)
        return (not v) if expr.op == "not" else -v
    if isinstance(expr, Binary):
        op = expr.op
        if op == "and":
            return eval_expr(expr.left, env) and eval_expr(expr.right, env)
        if op == "or":
            return eval_expr(expr.left, env) or eval_expr(expr.right, env)
        if op == "=>":
            return (not eval_expr(expr.left, env)) or eval_expr(expr.right, env)
        a = eval_expr(expr.left, env)
        b = eval_expr(expr.right, env)
        if op == "<=>":
            return a == b
        if op == "=":
            return a == b
        if op == "/=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "..":
            return make_set(range(a, b + 1))
        if op == "|->":
            return (a, b)
        if op in ("in", "notin"):
            if isinstance(b, MapVal):
                found = isinstance(a, tuple) and a in b.pairs
            else:
                found = a in b.items
            return found if op == "in" else not found
        if op == "<+":
            return make_map(list(_as_map(a).pairs) + list(_as_map(b).pairs))
        raise EvaluationFault(f"unknown operator {op!r}")
    if isinstance(expr, SetLit):
        items = [eval_expr(i, env) for i in expr.items]
        if items and all(isinstance(i, tuple) for i in items):
            keys = [k for k, _ in items]
            if len(set(keys)) != len(keys):
                raise EvaluationFault("maplet set is not a function (duplicate key)")
            return make_map(items)
        return make_set(items)
    if isinstance(expr, Apply):
        f = eval_expr(expr.func, env)
        x = eval_expr(expr.arg, env)
        if not isinstance(f, MapVal):
            raise EvaluationFault(f"application of a non-function value {render(f)}")
        try:
            return f.lookup(x)
        except KeyError:
            raise EvaluationFault(f"{render(x)} is outside the domain of {render(f)}") from None
    if isinstance(expr, Builtin):
        v = eval_expr(expr.arg, env)
        if expr.name == "card":
            return len(v.pairs) if isinstance(v, MapVal) else len(v.items)
        m = _as_map(v)
        if expr.name == "dom":
            return make_set(k for k, _ in m.pairs)
        return make_set(x for _, x in m.pairs)
    raise TypeError(f"not an expression: {expr!r}")


def _as_map(v: Any) -> MapVal:
    if isinstance(v, MapVal):
        return v
    if isinstance(v, SetVal) and not v.items:
        return MapVal(())
    raise EvaluationFault(f"{render(v)} is not a function")


# -- flattening --------------------------------------------------------------

def flatten_event(machine: Machine, event: Event, _seen: frozenset = frozenset()) -> Event:
    """Inline the ``extends`` chain: parent parameters, guards and actions are
    prepended (parent first). Idempotent on events that extend nothing."""
    if event.extends is None:
        return event
    key = (id(machine), event.name)
    if key in _seen:
        raise ModelError(Diagnostic(f"cyclic extends chain through {event.name!r}",
                                    machine=machine.name, event=event.name))
    parent = machine.parent
    if parent is None:
        raise ModelError(Diagnostic(f"event extends {event.extends!r} but the machine refines nothing",
                                    machine=machine.name, event=event.name))
    try:
        parent_event = parent.event(event.extends)
    except KeyError:
        raise ModelError(Diagnostic(f"dangling extends {event.extends!r}",
                                    machine=machine.name, event=event.name)) from None
    base = flatten_event(parent, parent_event, _seen | {key})
    return Event(
        event.name,
        base.params + event.params,
        base.guards + event.guards,
        base.actions + event.actions,
        None,
        pos=event.pos,
    )


def flat_events(machine: Machine) -> tuple[Event, ...]:
    cache = _FLAT_CACHE.get(id(machine))
    if cache is not None and cache[0] is machine:
        return cache[1]
    out = tuple(flatten_event(machine, e) for e in machine.events)
    _FLAT_CACHE[id(machine)] = (machine, out)
    return out


_FLAT_CACHE: dict[int, tuple[Machine, tuple[Event, ...]]] = {}


# -- constants ---------------------------------------------------------------

def static_env(machine: Machine) -> dict[str, Any]:
    """Carrier sets (as their full value sets) and their elements."""
    env: dict[str, Any] = {"BOOL": make_set([False, True])}
    for ctx in machine.all_contexts():
        for sname, elems in ctx.sets:
            vals = enum_values(EnumType(sname, elems))
            env[sname] = SetVal(tuple(vals))
            for v in vals:
                env[v.name] = v
    return env


def universes(machine: Machine, limit: int = 1_000_000) -> list[Universe]:
    """Enumerate every constant valuation that satisfies the axioms.

    Concrete constants are evaluated in declaration order; deferred ones range
    over their (finite) type. Constants fixed by a view are treated as
    concrete. Universes come out in lexicographic order of the deferred
    values, so the identifiers are stable.
    """
    base = static_env(machine)
    contexts = machine.all_contexts()
    fixed = dict(machine.fixed_constants)
    constants = [c for ctx in contexts for c in ctx.constants]
    axioms = [a for ctx in contexts for a in ctx.axioms]
    deferred = [c for c in constants if c.deferred and c.name not in fixed]
    domains = [list(enumerate_values(c.type)) for c in deferred]
    total = 1
    for d in domains:
        total *= len(d)
    if total > limit:
        raise ModelError(Diagnostic(f"{total} constant valuations exceed the limit of {limit}",
                                    machine=machine.name))
    out: list[Universe] = []
    for combo in itertools.product(*domains):
        env = dict(base)
        chosen = dict(zip((c.name for c in deferred), combo))
        try:
            for c in constants:
                if c.name in fixed:
                    env[c.name] = fixed[c.name]
                elif c.name in chosen:
                    env[c.name] = chosen[c.name]
                else:
                    env[c.name] = eval_expr(c.value, env)
            ok = all(eval_expr(a.expr, env) is True for a in axioms)
        except EvaluationFault:
            ok = False
        if not ok:
            continue
        uid = "; ".join(f"{k}={render(v)}" for k, v in chosen.items()) or "default"
        values = tuple((c.name, env[c.name]) for c in constants)
        out.append(Universe(uid, values, env))
    return out


def deferred_constants(machine: Machine) -> list[str]:
    fixed = dict(machine.fixed_constants)
    return [c.name for ctx in machine.all_contexts() for c in ctx.constants
            if c.deferred and c.name not in fixed]


# -- dynamics ----------------------------------------------------------------

def _env_of(universe_env: Mapping[str, Any]) -> dict[str, Any]:
    if isinstance(universe_env, Universe):
        return universe_env.env
    return dict(universe_env)


def init_states(machine: Machine, context_env) -> list[State]:
    """The initial state(s) for one universe. Actions are deterministic, so
    there is exactly one."""
    if machine.init is None:
        raise ModelError(Diagnostic("machine has no INITIALISATION", machine=machine.name))
    env = _env_of(context_env)
    values = {}
    for act in machine.init.actions:
        values[act.var] = eval_expr(act.expr, env)
    return [State.of(values)]


def _bindings(event: Event):
    if not event.params:
        yield ()
        return
    domains = [list(enumerate_values(p.type)) for p in event.params]
    names = [p.name for p in event.params]
    for combo in itertools.product(*domains):
        yield tuple(zip(names, combo))


def guards_hold(event: Event, env: Mapping[str, Any]) -> bool:
    try:
        for g in event.guards:
            if eval_expr(g.expr, env) is not True:
                return False
    except EvaluationFault:
        return False
    return True


def enabled_events(machine: Machine, state: State, context_env) -> list[tuple[Event, Binding]]:
    """Enabled (flattened event, binding) pairs in declaration order, then
    lexicographic binding order. Guard faults count as false."""
    base = _env_of(context_env)
    out = []
    for ev in flat_events(machine):
        for binding in _bindings(ev):
            env = {**base, **state.bindings, **dict(binding)}
            if guards_hold(ev, env):
                out.append((ev, binding))
    return out


def fire(machine: Machine, state: State, event: Event, binding: Binding, context_env) -> State:
    """Simultaneous assignment: every right-hand side is evaluated in the
    pre-state before any variable is written."""
    env = {**_env_of(context_env), **state.bindings, **dict(binding)}
    updates = {a.var: eval_expr(a.expr, env) for a in event.actions}
    if not updates:
        return state
    return State.of({**state.bindings, **updates})


def ill_typed(machine: Machine, state: State) -> list[str]:
    """Variables whose value lies outside their declared type."""
    return [v.name for v in machine.variables
            if v.name in state.bindings and not contains(v.type, state.bindings[v.name])]


__all__ = [
    "BOOL", "Binding", "INIT", "State", "Universe", "deferred_constants", "enabled_events",
    "eval_expr", "event_label", "fire", "flat_events", "flatten_event", "guards_hold",
    "ill_typed", "init_states", "show_binding", "static_env", "universes",
]

"""Syntax trees for expressions, contexts and machines.

Expression nodes are frozen and hashable; source positions are excluded from
equality so that structurally identical expressions compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Union

from .types import SemanticType


@dataclass(frozen=True)
class Pos:
    file: str | None
    line: int
    col: int


def _pos() -> Any:
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Lit:
    value: Any
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Name:
    name: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Unary:
    op: str  # "not" | "neg"
    operand: "Expr"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class SetLit:
    items: tuple["Expr", ...]
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Apply:
    func: "Expr"
    arg: "Expr"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Builtin:
    name: str  # "dom" | "ran" | "card"
    arg: "Expr"
    pos: Pos | None = _pos()


Expr = Union[Lit, Name, Unary, Binary, SetLit, Apply, Builtin]

_PREC = {
    "=>": 1, "<=>": 1, "or": 2, "and": 3,
    "=": 5, "/=": 5, "<": 5, "<=": 5, ">": 5, ">=": 5, "in": 5, "notin": 5,
    "<+": 6, "|->": 7, "..": 8, "+": 9, "-": 9, "*": 10,
}


def show(e: Expr, parent: int = 0) -> str:
    """Render an expression back to concrete syntax."""
    from .types import render

    if isinstance(e, Lit):
        return render(e.value)
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Unary):
        if e.op == "not":
            return f"not({show(e.operand)})"
        return f"-{show(e.operand, 11)}"
    if isinstance(e, Binary):
        p = _PREC[e.op]
        op = "/:" if e.op == "notin" else e.op
        text = f"{show(e.left, p)} {op} {show(e.right, p + 1)}"
        return f"({text})" if p < parent or (p == parent and p in (1, 5, 8)) else text
    if isinstance(e, SetLit):
        return "{" + ", ".join(show(i) for i in e.items) + "}"
    if isinstance(e, Apply):
        return f"{show(e.func, 12)}({show(e.arg)})"
    if isinstance(e, Builtin):
        return f"{e.name}({show(e.arg)})"
    raise TypeError(e)


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Unary):
        yield from walk(e.operand)
    elif isinstance(e, Binary):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, SetLit):
        for i in e.items:
            yield from walk(i)
    elif isinstance(e, Apply):
        yield from walk(e.func)
        yield from walk(e.arg)
    elif isinstance(e, Builtin):
        yield from walk(e.arg)


def free_names(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Name)}


# -- declarations -----------------------------------------------------------

@dataclass(frozen=True)
class Labeled:
    label: str
    expr: Expr
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Action:
    label: str
    var: str
    expr: Expr
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Param:
    name: str
    type: SemanticType


@dataclass(frozen=True)
class Event:
    name: str
    params: tuple[Param, ...] = ()
    guards: tuple[Labeled, ...] = ()
    actions: tuple[Action, ...] = ()
    extends: str | None = None
    pos: Pos | None = _pos()


INIT = "INITIALISATION"


@dataclass(frozen=True)
class Constant:
    name: str
    type: SemanticType
    value: Expr | None = None

    @property
    def deferred(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class Context:
    name: str
    sets: tuple[tuple[str, tuple[str, ...]], ...] = ()
    constants: tuple[Constant, ...] = ()
    axioms: tuple[Labeled, ...] = ()
    parent: "Context | None" = field(default=None, compare=False, repr=False)
    pos: Pos | None = _pos()

    @property
    def extends(self) -> str | None:
        return self.parent.name if self.parent else None

    def lineage(self) -> list["Context"]:
        """Ancestors first, self last."""
        chain: list[Context] = []
        c: Context | None = self
        while c is not None:
            chain.append(c)
            c = c.parent
        return chain[::-1]


@dataclass(frozen=True)
class Variable:
    name: str
    type: SemanticType


@dataclass(frozen=True)
class Machine:
    name: str
    variables: tuple[Variable, ...] = ()
    declared_invariants: tuple[Labeled, ...] = ()
    init: Event | None = None
    events: tuple[Event, ...] = ()
    sees: tuple[str, ...] = ()
    contexts: tuple[Context, ...] = field(default=(), compare=False, repr=False)
    parent: "Machine | None" = field(default=None, compare=False, repr=False)
    fixed_constants: tuple[tuple[str, Any], ...] = ()
    view_of: str | None = None
    pos: Pos | None = _pos()

    @property
    def refines(self) -> str | None:
        return self.parent.name if self.parent else None

    @property
    def invariants(self) -> tuple[Labeled, ...]:
        inherited = self.parent.invariants if self.parent else ()
        return inherited + self.declared_invariants

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable_type(self, name: str) -> SemanticType:
        for v in self.variables:
            if v.name == name:
                return v.type
        raise KeyError(name)

    def event(self, name: str) -> Event:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def event_names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.events)

    def depth(self) -> int:
        return 0 if self.parent is None else 1 + self.parent.depth()

    def ancestors(self) -> list["Machine"]:
        out = []
        m = self.parent
        while m is not None:
            out.append(m)
            m = m.parent
        return out

    def all_contexts(self) -> list[Context]:
        """Every context visible to the machine, ancestors first, no duplicates."""
        seen: dict[str, Context] = {}
        for c in self.contexts:
            for a in c.lineage():
                seen.setdefault(a.name, a)
        return list(seen.values())


@dataclass
class Project:
    contexts: dict[str, Context] = field(default_factory=dict)
    machines: dict[str, Machine] = field(default_factory=dict)
    derived: dict[str, Machine] = field(default_factory=dict)
    vos: list = field(default_factory=list)
    views: list = field(default_factory=list)
    root: str | None = None

    def machine(self, name: str) -> Machine:
        if name in self.machines:
            return self.machines[name]
        if name in self.derived:
            return self.derived[name]
        raise KeyError(name)

    def has_machine(self, name: str) -> bool:
        return name in self.machines or name in self.derived

    def refinements_of(self, name: str) -> list[Machine]:
        """Declared machines that (transitively) refine ``name``, shallowest first."""
        out = [m for m in self.machines.values()
               if any(a.name == name for a in m.ancestors())]
        return sorted(out, key=lambda m: (m.depth(), m.name))

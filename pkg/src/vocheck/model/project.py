"""Resolution of parsed sources into a linked :class:`Project`."""

from __future__ import annotations

from typing import Iterable

from ..errors import Diagnostic, ModelError
from .ast import Constant, Context, Event, Machine, Param, Pos, Project, Variable
from .parser import RawContext, RawEvent, RawMachine, TypeName, parse_source
from .types import EnumType, FuncType, PowType


def _diag(msg: str, pos: Pos | None, **kw) -> Diagnostic:
    if pos is None:
        return Diagnostic(msg, **kw)
    return Diagnostic(msg, pos.file, pos.line, pos.col, **kw)


def resolve_type(t, carriers: dict[str, EnumType], pos: Pos | None = None):
    if isinstance(t, TypeName):
        if t.name not in carriers:
            raise ModelError(_diag(f"unknown type or carrier set {t.name!r}", t.pos or pos))
        return carriers[t.name]
    if isinstance(t, PowType):
        return PowType(resolve_type(t.element, carriers, pos))
    if isinstance(t, FuncType):
        return FuncType(resolve_type(t.domain, carriers, pos),
                        resolve_type(t.codomain, carriers, pos), t.total)
    return t


def _toposort(items: dict[str, object], parent_of, kind: str) -> list[str]:
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(name: str, path: list[str]):
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            cycle = " -> ".join(path[path.index(name):] + [name])
            raise ModelError(Diagnostic(f"cyclic {kind} chain: {cycle}"))
        state[name] = 1
        p = parent_of(items[name])
        if p is not None and p in items:
            visit(p, path + [name])
        state[name] = 2
        order.append(name)

    for n in items:
        visit(n, [])
    return order


def carriers_of(contexts: Iterable[Context]) -> dict[str, EnumType]:
    out: dict[str, EnumType] = {}
    for c in contexts:
        for a in c.lineage():
            for name, elems in a.sets:
                out[name] = EnumType(name, elems)
    return out


def parse_project(sources: list[tuple[str, str]]) -> Project:
    """Parse and link ``(filename, text)`` pairs.

    Raises :class:`ModelError` listing every syntax error, duplicate name and
    dangling ``refines``/``sees``/``extends`` reference found.
    """
    if not sources:
        raise ModelError(Diagnostic("no model sources given"))
    errors: list[Diagnostic] = []
    raw_ctx: dict[str, RawContext] = {}
    raw_mch: dict[str, RawMachine] = {}
    for filename, text in sources:
        try:
            item = parse_source(text, filename)
        except ModelError as exc:
            errors.extend(exc.diagnostics)
            continue
        if item.name in raw_ctx or item.name in raw_mch:
            errors.append(_diag(f"duplicate component name {item.name!r}", item.pos))
            continue
        if isinstance(item, RawContext):
            raw_ctx[item.name] = item
        else:
            raw_mch[item.name] = item
    if errors:
        raise ModelError(errors)

    project = Project()

    # contexts
    for rc in raw_ctx.values():
        if rc.extends is not None and rc.extends not in raw_ctx:
            errors.append(_diag(f"context {rc.name!r} extends unknown context {rc.extends!r}", rc.pos))
    for rm in raw_mch.values():
        if rm.refines is not None and rm.refines not in raw_mch:
            errors.append(_diag(f"machine {rm.name!r} refines unknown machine {rm.refines!r}", rm.pos))
        for s in rm.sees:
            if s not in raw_ctx:
                errors.append(_diag(f"machine {rm.name!r} sees unknown context {s!r}", rm.pos))
    if errors:
        raise ModelError(errors)

    ctx_order = _toposort(raw_ctx, lambda c: c.extends, "context extends")
    global_names: dict[str, str] = {}

    def claim(name: str, what: str, pos: Pos | None):
        if name in global_names:
            errors.append(_diag(f"{what} {name!r} clashes with {global_names[name]} of the same name", pos))
        else:
            global_names[name] = what

    for name in ctx_order:
        rc = raw_ctx[name]
        parent = project.contexts.get(rc.extends) if rc.extends else None
        sets = []
        for sname, elems, spos in rc.sets:
            claim(sname, "carrier set", spos)
            if len(set(elems)) != len(elems):
                errors.append(_diag(f"carrier set {sname!r} lists an element twice", spos))
            for e in elems:
                claim(e, "set element", spos)
            sets.append((sname, elems))
        provisional = Context(name, tuple(sets), (), (), parent=parent, pos=rc.pos)
        carriers = carriers_of([provisional])
        constants = []
        for cname, ctype, cval, cpos in rc.constants:
            claim(cname, "constant", cpos)
            try:
                constants.append(Constant(cname, resolve_type(ctype, carriers, cpos), cval))
            except ModelError as exc:
                errors.extend(exc.diagnostics)
        project.contexts[name] = Context(name, tuple(sets), tuple(constants), tuple(rc.axioms),
                                         parent=parent, pos=rc.pos)

    # machines
    mch_order = _toposort(raw_mch, lambda m: m.refines, "refines")
    for name in mch_order:
        rm = raw_mch[name]
        parent = project.machines.get(rm.refines) if rm.refines else None
        contexts = tuple(project.contexts[s] for s in rm.sees if s in project.contexts)
        if parent is not None:
            own = {c.name for c in contexts}
            contexts = contexts + tuple(c for c in parent.contexts if c.name not in own)
        carriers = carriers_of(contexts)
        variables = []
        seen_vars: set[str] = set()
        for vname, vtype, vpos in rm.variables:
            if vname in seen_vars:
                errors.append(_diag(f"variable {vname!r} declared twice", vpos, machine=name))
                continue
            seen_vars.add(vname)
            try:
                variables.append(Variable(vname, resolve_type(vtype, carriers, vpos)))
            except ModelError as exc:
                errors.extend(exc.diagnostics)
        events = []
        seen_events: set[str] = set()
        for rev in rm.events:
            if rev.name in seen_events:
                errors.append(_diag(f"event {rev.name!r} declared twice", rev.pos, machine=name))
                continue
            seen_events.add(rev.name)
            if rev.extends is not None:
                if parent is None:
                    errors.append(_diag(f"event {rev.name!r} extends {rev.extends!r} but machine "
                                        f"{name!r} refines nothing", rev.pos, machine=name))
                elif rev.extends not in parent.event_names:
                    errors.append(_diag(f"event {rev.name!r} extends unknown event {rev.extends!r} "
                                        f"of {parent.name!r}", rev.pos, machine=name))
            try:
                events.append(_resolve_event(rev, carriers))
            except ModelError as exc:
                errors.extend(exc.diagnostics)
        init = _resolve_event(rm.init, carriers) if rm.init is not None else None
        project.machines[name] = Machine(
            name, tuple(variables), tuple(rm.invariants), init, tuple(events),
            sees=tuple(rm.sees), contexts=contexts, parent=parent, pos=rm.pos)
    if errors:
        raise ModelError(errors)
    # keep declaration order stable for reports
    project.contexts = {n: project.contexts[n] for n in raw_ctx}
    project.machines = {n: project.machines[n] for n in raw_mch}
    return project


def _resolve_event(rev: RawEvent, carriers: dict[str, EnumType]) -> Event:
    params = tuple(Param(n, resolve_type(t, carriers, p)) for n, t, p in rev.params)
    return Event(rev.name, params, tuple(rev.guards), tuple(rev.actions), rev.extends, pos=rev.pos)

"""Scenario views: derive a concrete machine by fixing deferred constants or
initialisation actions, check that it adds no behaviour, and run template
VOs over every scenario built from the same recipe."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Any

from .errors import EvaluationFault, ModelError, Refusal, ViewError
from .explorer import DEFAULT_MAX_STATES, StateGraph, explore
from .model.ast import INIT, Action, Event, Expr, Machine, Project, show
from .model.parser import parse_expr
from .model.semantics import Binding, eval_expr, event_label, static_env, universes
from .model.typecheck import TypeErr, context_scope, infer, typecheck_machine
from .model.types import compatible, contains, render
from .vo import PASS, VO, GraphCache, VOResult, _aggregate, parse_vo_line, run_vo

INIT_PREFIX = INIT + "."


@dataclass(frozen=True)
class ViewBinding:
    target: str
    expr: Expr
    text: str
    line: int | None = None


@dataclass(frozen=True)
class TemplateVO:
    requirement: str
    technique: str
    parameters: str
    notes: tuple[str, ...] = ()
    line: int | None = None

    def instantiate(self, machine: str, file: str | None = None) -> VO:
        return VO(self.requirement, machine, self.technique, self.parameters, file, self.line,
                  self.notes)


@dataclass(frozen=True)
class ViewSpec:
    name: str
    base: str
    bindings: tuple[ViewBinding, ...] = ()
    templates: tuple[TemplateVO, ...] = ()
    file: str | None = None
    line: int | None = None

    @property
    def shape(self) -> tuple[str, ...]:
        return tuple(sorted(b.target for b in self.bindings))


@dataclass(frozen=True)
class DerivedMachine:
    machine: Machine
    base: Machine
    spec: ViewSpec


# -- parsing -----------------------------------------------------------------

_KEYWORD = re.compile(r"\b(view|bind|template|end)\b")
_OPEN, _CLOSE = "({[", ")}]"


def _strip_comments(text: str) -> tuple[str, list[tuple[int, str]]]:
    """Blank out ``#`` comments (keeping offsets) and collect ``# note:`` lines."""
    out, notes = [], []
    offset = 0
    for line in text.splitlines(keepends=True):
        i = line.find("#")
        if i >= 0:
            m = re.match(r"#\s*note:\s*(.*?)\s*$", line[i:], re.I)
            if m:
                notes.append((offset + i, m.group(1)))
            line = line[:i] + " " * (len(line) - i - (1 if line.endswith("\n") else 0)) + \
                ("\n" if line.endswith("\n") else "")
        out.append(line)
        offset += len(line)
    return "".join(out), notes


def _top_level_keywords(text: str):
    depth = 0
    for i, ch in enumerate(text):
        if ch in _OPEN:
            depth += 1
        elif ch in _CLOSE:
            depth -= 1
        elif depth == 0 and ch.isalpha() and (i == 0 or not (text[i - 1].isalnum() or text[i - 1] in "_.@")):
            m = _KEYWORD.match(text, i)
            if m and (m.end() == len(text) or not (text[m.end()].isalnum() or text[m.end()] == "_")):
                yield m.start(), m.group(1)


def _split_top(text: str, seps: str) -> list[tuple[int, str]]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in _OPEN:
            depth += 1
        elif ch in _CLOSE:
            depth -= 1
        elif depth == 0 and ch in seps:
            parts.append((start, text[start:i]))
            start = i + 1
    parts.append((start, text[start:]))
    return [(o, p) for o, p in parts if p.strip()]


def parse_view_file(text: str, file: str | None = None) -> list[ViewSpec]:
    """Parse one or more ``view NAME of BASE bind ... template ... end`` blocks.

    Bindings are ``TARGET := expr`` separated by newlines or ``;``; each
    ``template VO REQ / TECHNIQUE / parameters`` runs to the end of its line
    (or to ``end``). ``# note:`` comments attach to the following template.
    """
    clean, notes = _strip_comments(text)

    def line_of(offset: int) -> int:
        return clean.count("\n", 0, offset) + 1

    marks = list(_top_level_keywords(clean))
    views: list[ViewSpec] = []
    i = 0
    if not marks or clean[: marks[0][0]].strip():
        raise ViewError(f"{file or '<view>'}:{line_of(0)}: expected 'view NAME of BASE'")
    while i < len(marks):
        start, kw = marks[i]
        if kw != "view":
            raise ViewError(f"{file or '<view>'}:{line_of(start)}: unexpected {kw!r}")
        j = i + 1
        while j < len(marks) and marks[j][1] != "end":
            if marks[j][1] == "view":
                raise ViewError(f"{file or '<view>'}:{line_of(marks[j][0])}: missing 'end'")
            j += 1
        if j == len(marks):
            raise ViewError(f"{file or '<view>'}:{line_of(start)}: view is not closed by 'end'")
        sections = marks[i:j + 1]
        views.append(_parse_view(clean, sections, notes, file, line_of))
        after = marks[j + 1][0] if j + 1 < len(marks) else len(clean)
        if clean[sections[-1][0] + 3: after].strip():
            raise ViewError(f"{file or '<view>'}:{line_of(sections[-1][0])}: text after 'end'")
        i = j + 1
    names = [v.name for v in views]
    if len(set(names)) != len(names):
        raise ViewError(f"{file or '<view>'}: duplicate view name")
    return views


def _parse_view(clean: str, sections, notes, file, line_of) -> ViewSpec:
    where = file or "<view>"
    start = sections[0][0]
    head_end = sections[1][0]
    head = clean[start + 4: head_end].split()
    if len(head) != 3 or head[1] != "of":
        raise ViewError(f"{where}:{line_of(start)}: expected 'view NAME of BASE'")
    name, base = head[0], head[2]
    bindings: list[ViewBinding] = []
    templates: list[TemplateVO] = []
    targets: set[str] = set()
    for (s, kw), (e, _) in zip(sections[1:-1], sections[2:]):
        body_start = s + len(kw)
        body = clean[body_start:e]
        if kw == "bind":
            for off, part in _split_top(body, "\n;"):
                lhs, sep, rhs = part.partition(":=")
                line = line_of(body_start + off + len(part) - len(part.lstrip()))
                if not sep or not lhs.strip() or not rhs.strip():
                    raise ViewError(f"{where}:{line}: expected 'TARGET := expression'")
                target = lhs.strip()
                if target in targets:
                    raise ViewError(f"{where}:{line}: {target} bound twice")
                targets.add(target)
                try:
                    expr = parse_expr(rhs.strip(), file, line)
                except ModelError as exc:
                    raise ViewError(f"{where}:{line}: {exc.diagnostics[0].message}") from None
                bindings.append(ViewBinding(target, expr, rhs.strip(), line))
        elif kw == "template":
            parts = _split_top(body, "\n")
            if len(parts) != 1:
                raise ViewError(f"{where}:{line_of(s)}: expected one template VO per 'template' line")
            lower = _prev_mark(sections, s)
            attached = tuple(n for o, n in notes if lower < o < s)
            templates.append(_parse_template(parts[0][1].strip(), file, line_of(s), attached))
        else:
            raise ViewError(f"{where}:{line_of(s)}: unexpected {kw!r}")
    return ViewSpec(name, base, tuple(bindings), tuple(templates), file, line_of(start))


def _prev_mark(sections, s: int) -> int:
    prev = [o for o, _ in sections if o < s]
    return prev[-1] if prev else -1


def _parse_template(text: str, file, line, notes) -> TemplateVO:
    m = re.match(r"^VO\s+([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(.*)$", text, re.S)
    if not m:
        raise ViewError(f"{file or '<view>'}:{line}: expected 'template VO REQ / TECHNIQUE / parameters'")
    # reuse the VO grammar with a placeholder machine slot
    vo = parse_vo_line(f"VO {m.group(1)} : _ / {m.group(2)}", file=file, lineno=line, lenient=False)
    return TemplateVO(vo.requirement, vo.technique, vo.parameters, tuple(notes), line)


# -- application -------------------------------------------------------------

def _init_label(target: str) -> str | None:
    return target[len(INIT_PREFIX):] if target.startswith(INIT_PREFIX) else None


def apply_view(project: Project, spec: ViewSpec, *, register: bool = True) -> DerivedMachine:
    """Build the derived machine for ``spec`` and (by default) register it in
    ``project.derived``. The base machine is left untouched."""
    if spec.name in project.machines or spec.name in project.derived or spec.name in project.contexts:
        raise ViewError(f"view name {spec.name!r} collides with an existing component")
    if spec.base not in project.machines:
        raise ViewError(f"view {spec.name}: unknown base machine {spec.base!r}")
    base = project.machines[spec.base]
    if base.init is None:
        raise ViewError(f"view {spec.name}: base machine has no INITIALISATION")
    deferred = {c.name: c for ctx in base.all_contexts() for c in ctx.constants}
    scope = context_scope(base.all_contexts())
    env = static_env(base)
    fixed: dict[str, Any] = {}
    init_actions = {a.label: a for a in base.init.actions}
    overrides: dict[str, Expr] = {}
    for b in spec.bindings:
        where = f"view {spec.name}, binding {b.target}"
        label = _init_label(b.target)
        if label is not None:
            if label not in init_actions:
                raise ViewError(f"{where}: {spec.base} has no initialisation action {label}")
            target_type = base.variable_type(init_actions[label].var)
            _typecheck(b.expr, scope, target_type, where)
            overrides[label] = b.expr
            continue
        const = deferred.get(b.target)
        if const is None:
            raise ViewError(f"{where}: not a constant or initialisation action of {spec.base}")
        if not const.deferred:
            raise ViewError(f"{where}: constant {b.target} already has a value and cannot be bound")
        _typecheck(b.expr, scope, const.type, where)
        try:
            value = eval_expr(b.expr, env)
        except EvaluationFault as exc:
            raise ViewError(f"{where}: {exc}") from None
        if not contains(const.type, value):
            raise ViewError(f"{where}: {render(value)} is not a value of type {const.type}")
        fixed[b.target] = value
    init = Event(INIT, (), (), tuple(
        Action(a.label, a.var, overrides.get(a.label, a.expr), pos=a.pos) for a in base.init.actions))
    events = tuple(Event(e.name, (), (), (), e.name) for e in base.events)
    derived = Machine(spec.name, base.variables, (), init, events, base.sees, base.contexts,
                      parent=base, fixed_constants=tuple(sorted(fixed.items())), view_of=base.name)
    problems = typecheck_machine(derived)
    if problems:
        raise ViewError(f"view {spec.name} does not typecheck: {problems[0]}")
    try:
        if not universes(derived):
            raise ViewError(f"view {spec.name}: bound constants violate the axioms of {spec.base}")
    except ModelError as exc:
        raise ViewError(f"view {spec.name}: {exc}") from None
    if register:
        project.derived[spec.name] = derived
    return DerivedMachine(derived, base, spec)


def _typecheck(expr: Expr, scope, expected, where: str) -> None:
    try:
        t = infer(expr, scope)
    except TypeErr as exc:
        raise ViewError(f"{where}: type error: {exc}") from None
    if not compatible(t, expected):
        raise ViewError(f"{where}: type error: expected {expected}, got {t}")


# -- behaviour inclusion -----------------------------------------------------

@dataclass(frozen=True)
class InclusionVerdict:
    holds: bool
    witness: tuple[str, ...] | None = None  # shortest trace of the view the base cannot do
    view_states: int = 0
    base_states: int = 0


def _graphs(machine: Machine, max_states: int) -> list[StateGraph]:
    graphs = [explore(machine, u, max_states=max_states) for u in universes(machine)]
    for g in graphs:
        if g.truncated:
            raise Refusal(f"state space of {machine.name} ({g.universe_id}) was truncated")
    return graphs


def check_view_refines_base(project: Project, derived: DerivedMachine | Machine, *,
                            max_states: int = DEFAULT_MAX_STATES) -> InclusionVerdict:
    """Every event sequence of the view is an event sequence of the base in
    some constant universe. Subset construction over the union of the base
    universes; breadth-first, so a failure witness is shortest."""
    view = derived.machine if isinstance(derived, DerivedMachine) else derived
    base = project.machines[view.view_of] if view.view_of else view.parent
    if base is None:
        raise ViewError(f"{view.name} is not a view")
    vgraphs = _graphs(view, max_states)
    bgraphs = _graphs(base, max_states)

    def real(g: StateGraph, s: int):
        return [t for t in g.successors(s, synthetic=False)]

    Macro = frozenset
    start_macro: Macro = frozenset((bi, s) for bi, g in enumerate(bgraphs) for s in g.initial)
    seen: set = set()
    q: deque = deque()
    for vi, g in enumerate(vgraphs):
        for s in g.initial:
            node = ((vi, s), start_macro)
            if node not in seen:
                seen.add(node)
                q.append((node, ()))
    while q:
        ((vi, s), macro), path = q.popleft()
        g = vgraphs[vi]
        for t in real(g, s):
            label: tuple[str, Binding] = (t.event, t.binding)
            nxt = frozenset((bi, bt.dst) for bi, bs in macro for bt in real(bgraphs[bi], bs)
                            if (bt.event, bt.binding) == label)
            steps = path + (event_label(t.event, t.binding),)
            if not nxt:
                return InclusionVerdict(False, steps, sum(len(x.states) for x in vgraphs),
                                        sum(len(x.states) for x in bgraphs))
            node = ((vi, t.dst), nxt)
            if node not in seen:
                seen.add(node)
                q.append((node, steps))
    return InclusionVerdict(True, None, sum(len(x.states) for x in vgraphs),
                            sum(len(x.states) for x in bgraphs))


# -- templates ---------------------------------------------------------------

@dataclass(frozen=True)
class TemplateAggregate:
    requirement: str
    status: str
    scenarios: tuple[str, ...]
    vacuous: bool = False


@dataclass(frozen=True)
class TemplateRun:
    results: tuple[VOResult, ...] = ()
    aggregates: tuple[TemplateAggregate, ...] = ()
    notes: tuple[str, ...] = field(default=())


def scenarios_for(project: Project, recipe: ViewSpec) -> list[ViewSpec]:
    """Project views built the same way as ``recipe`` (same base, same bound
    targets), in declaration order."""
    return [v for v in project.views if v.base == recipe.base and v.shape == recipe.shape]


def run_template_vos(project: Project, recipe: ViewSpec, scenarios: list[ViewSpec], *,
                     cache: GraphCache | None = None, timing: bool = False) -> TemplateRun:
    """Instantiate each template VO of ``recipe`` on every scenario and run it.
    A template passes iff it passes on all scenarios; with no scenarios it
    passes vacuously and is flagged as such."""
    cache = cache or GraphCache()
    for sc in scenarios:
        if sc.base != recipe.base or sc.shape != recipe.shape:
            raise ViewError(f"scenario {sc.name} does not match the recipe {recipe.name}: expected "
                            f"bindings of {', '.join(recipe.shape) or 'nothing'} on {recipe.base}")
    results: list[VOResult] = []
    aggregates: list[TemplateAggregate] = []
    for tpl in recipe.templates:
        mine = []
        for sc in scenarios:
            if sc.name not in project.derived:
                apply_view(project, sc)
            vo = tpl.instantiate(sc.name, recipe.file)
            r = run_vo(project, vo, cache, timing=timing)
            mine.append(VOResult(r.vo, r.machine, r.status, False, r.universes, r.diagnostic,
                                 r.wall_time_ms, view=sc.name))
        results.extend(mine)
        status = _aggregate(mine) if mine else PASS
        aggregates.append(TemplateAggregate(tpl.requirement, status,
                                            tuple(sc.name for sc in scenarios), vacuous=not mine))
    return TemplateRun(tuple(results), tuple(aggregates))


# -- source generation -------------------------------------------------------

def view_source(derived: DerivedMachine) -> dict[str, str]:
    """Model source for the derived machine: ``{file name: text}``. Fixed
    constants become axioms of a generated context extending the context
    that declares them."""
    m, base = derived.machine, derived.base
    files: dict[str, str] = {}
    owners: dict[str, list[tuple[str, Any]]] = {}
    for ctx in base.all_contexts():
        for c in ctx.constants:
            if c.name in dict(m.fixed_constants):
                owners.setdefault(ctx.name, []).append((c.name, dict(m.fixed_constants)[c.name]))
    sees = list(base.sees)
    for owner, consts in owners.items():
        cname = f"{m.name}_{owner}"
        lines = [f"// generated from view {m.name}", f"context {cname} extends {owner}", "axioms"]
        for i, (name, value) in enumerate(consts, 1):
            lines.append(f"  @view{i} {name} = {render(value)}")
        lines.append("end")
        files[f"{cname}.ebs"] = "\n".join(lines) + "\n"
        sees.append(cname)
    lines = [f"// generated from view {m.name} of {base.name}",
             f"machine {m.name} refines {base.name}" + (f" sees {', '.join(sees)}" if sees else "")]
    lines.append("variables")
    for v in m.variables:
        lines.append(f"  {v.name} : {v.type}")
    lines.append("init")
    for a in m.init.actions:
        lines.append(f"  {a.label} {a.var} := {show(a.expr)}")
    lines.append("end")
    for e in m.events:
        lines.append(f"event {e.name} extends {e.extends}")
        lines.append("end")
    lines.append("end")
    files[f"{m.name}.ebs"] = "\n".join(lines) + "\n"
    return files

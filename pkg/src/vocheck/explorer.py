"""Breadth-first state-space exploration, trace replay and graph export."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .errors import AmbiguousStepError, EvaluationFault, ExplorationError, Refusal
from .model.ast import Expr, Machine
from .model.lexer import tokenize
from .model.parser import ExprParser, TokenStream
from .model.semantics import (Binding, State, Universe, enabled_events, eval_expr, event_label, fire,
                              flat_events, ill_typed, init_states, universes)
from .model.types import render, to_json

DEADLOCK = "⟨deadlock⟩"
DEFAULT_MAX_STATES = 100_000


@dataclass(frozen=True)
class Transition:
    src: int
    event: str
    binding: Binding
    dst: int
    synthetic: bool = False

    @property
    def label(self) -> str:
        return event_label(self.event, self.binding)


@dataclass(frozen=True)
class Step:
    event: str
    binding: Binding
    state: State
    synthetic: bool = False

    @property
    def label(self) -> str:
        return event_label(self.event, self.binding)


@dataclass(frozen=True)
class Trace:
    start: State
    steps: tuple[Step, ...] = ()

    @property
    def end(self) -> State:
        return self.steps[-1].state if self.steps else self.start

    def __len__(self) -> int:
        return len(self.steps)

    def labels(self) -> list[str]:
        return [s.label for s in self.steps]

    def to_json(self) -> dict:
        return {
            "start": _bindings_json(self.start),
            "steps": [
                {"event": s.event, "binding": {k: to_json(v) for k, v in s.binding},
                 "state": _bindings_json(s.state), **({"synthetic": True} if s.synthetic else {})}
                for s in self.steps
            ],
        }


@dataclass(frozen=True)
class Lasso:
    """A counterexample path: ``prefix`` followed by ``cycle`` repeated forever.
    ``cycle.start`` equals ``prefix.end`` and ``cycle.end``."""

    prefix: Trace
    cycle: Trace

    def to_json(self) -> dict:
        return {"prefix": self.prefix.to_json(), "cycle": self.cycle.to_json()}

    def labels(self) -> list[str]:
        return self.prefix.labels() + self.cycle.labels()


@dataclass(frozen=True)
class TraceRefusal:
    """The requested event sequence is infeasible at ``step`` (1-based)."""

    step: int
    event: str
    reason: str
    alternatives: tuple[str, ...]
    prefix: Trace

    def to_json(self) -> dict:
        return {"step": self.step, "event": self.event, "reason": self.reason,
                "alternatives": list(self.alternatives), "feasible_prefix": self.prefix.to_json()}


def _bindings_json(s: State) -> dict[str, Any]:
    return {k: to_json(v) for k, v in s.values}


@dataclass(frozen=True)
class StateGraph:
    machine: str
    universe: Universe
    states: tuple[State, ...]
    transitions: tuple[Transition, ...]
    initial: tuple[int, ...]
    deadlocks: frozenset[int]
    truncated: bool
    event_names: tuple[str, ...]
    # BFS tree: index of the transition that first reached each state
    parent_transition: tuple[int | None, ...] = field(repr=False, default=())
    outgoing: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    @property
    def universe_id(self) -> str:
        return self.universe.id

    @property
    def env(self) -> dict:
        return self.universe.env

    def successors(self, index: int, *, synthetic: bool = True) -> list[Transition]:
        ts = [self.transitions[i] for i in self.outgoing[index]]
        return ts if synthetic else [t for t in ts if not t.synthetic]

    def trace_to(self, index: int) -> Trace:
        """Shortest trace from an initial state to ``index`` (BFS tree path)."""
        steps: list[Step] = []
        cur = index
        while self.parent_transition[cur] is not None:
            t = self.transitions[self.parent_transition[cur]]
            steps.append(Step(t.event, t.binding, self.states[t.dst]))
            cur = t.src
        return Trace(self.states[cur], tuple(reversed(steps)))

    def trace_of(self, start: int, transitions: Sequence[int]) -> Trace:
        steps = []
        for ti in transitions:
            t = self.transitions[ti]
            steps.append(Step(t.event, t.binding, self.states[t.dst], t.synthetic))
        return Trace(self.states[start], tuple(steps))

    @classmethod
    def build(cls, machine: str, states: Sequence[State], transitions: Iterable[Transition],
              initial: Iterable[int], event_names: Sequence[str], *, universe: Universe | None = None,
              truncated: bool = False, totalize: bool = True,
              frontier: Iterable[int] = ()) -> "StateGraph":
        """Assemble a graph from explicit parts (adds deadlock self-loops and
        the BFS tree). Used by :func:`explore` and by tests building small
        synthetic structures."""
        states = tuple(states)
        real = [t for t in transitions if not t.synthetic]
        initial = tuple(sorted(set(initial)))
        has_out = {t.src for t in real}
        # frontier states of a truncated search were not (fully) expanded
        skip = set(frontier)
        deadlocks = frozenset(i for i in range(len(states)) if i not in has_out and i not in skip)
        all_t = list(real)
        if totalize:
            all_t += [Transition(i, DEADLOCK, (), i, True) for i in sorted(deadlocks)]
        out: list[list[int]] = [[] for _ in states]
        for ti, t in enumerate(all_t):
            out[t.src].append(ti)
        parent: list[int | None] = [None] * len(states)
        seen = set(initial)
        q = deque(initial)
        while q:
            s = q.popleft()
            for ti in out[s]:
                d = all_t[ti].dst
                if d not in seen:
                    seen.add(d)
                    parent[d] = ti
                    q.append(d)
        return cls(machine, universe or Universe("default"), states, tuple(all_t), initial,
                   deadlocks, truncated, tuple(event_names), tuple(parent),
                   tuple(tuple(o) for o in out))


def explore(machine: Machine, context_env: Universe, *, max_states: int = DEFAULT_MAX_STATES,
            max_depth: int | None = None) -> StateGraph:
    """Explore the reachable states of ``machine`` in one constant universe.

    States are numbered in BFS discovery order; successors follow
    :func:`enabled_events` order. Deadlock states receive a synthetic
    self-loop labelled ``⟨deadlock⟩``. Exceeding a limit sets ``truncated``.
    """
    if max_states < 1:
        raise ValueError("max_states must be at least 1")
    index: dict[State, int] = {}
    states: list[State] = []
    parent: list[tuple[int, str, Binding] | None] = []
    transitions: list[Transition] = []
    depth: list[int] = []
    truncated = False
    unexpanded: set[int] = set()

    def path_to(i: int) -> list[str]:
        labels = []
        while parent[i] is not None:
            src, ev, b = parent[i]
            labels.append(event_label(ev, b))
            i = src
        return labels[::-1]

    initial = []
    for s in init_states(machine, context_env):
        bad = ill_typed(machine, s)
        if bad:
            raise ExplorationError(f"initial state violates the type of {', '.join(bad)}")
        if s not in index:
            if len(states) >= max_states:
                truncated = True
                break
            index[s] = len(states)
            states.append(s)
            parent.append(None)
            depth.append(0)
        initial.append(index[s])

    q = deque(initial)
    while q:
        i = q.popleft()
        s = states[i]
        if max_depth is not None and depth[i] >= max_depth:
            if enabled_events(machine, s, context_env):
                truncated = True
                unexpanded.add(i)
            continue
        for ev, binding in enabled_events(machine, s, context_env):
            try:
                t = fire(machine, s, ev, binding, context_env)
            except EvaluationFault as exc:
                raise ExplorationError(
                    f"action of {event_label(ev.name, binding)} is not well-defined: {exc}",
                    trace=path_to(i) + [event_label(ev.name, binding)]) from exc
            bad = ill_typed(machine, t)
            if bad:
                raise ExplorationError(
                    f"{event_label(ev.name, binding)} leaves {', '.join(bad)} outside its type",
                    trace=path_to(i) + [event_label(ev.name, binding)])
            j = index.get(t)
            if j is None:
                if len(states) >= max_states:
                    truncated = True
                    unexpanded.add(i)
                    continue
                j = len(states)
                index[t] = j
                states.append(t)
                parent.append((i, ev.name, binding))
                depth.append(depth[i] + 1)
                q.append(j)
            transitions.append(Transition(i, ev.name, binding, j))

    return StateGraph.build(machine.name, states, transitions, initial,
                            [e.name for e in flat_events(machine)],
                            universe=context_env, truncated=truncated, frontier=unexpanded)


def explore_all(machine: Machine, **limits) -> list[StateGraph]:
    return [explore(machine, u, **limits) for u in universes(machine)]


def find_deadlocks(graph: StateGraph) -> list[State]:
    if graph.truncated:
        raise Refusal("graph is truncated; deadlock freedom cannot be decided")
    return [graph.states[i] for i in sorted(graph.deadlocks)]


# -- trace replay ------------------------------------------------------------

StepRequest = tuple[str, "dict[str, Any] | Sequence[Any] | None"]


def check_trace(machine: Machine, context_env: Universe,
                events: Sequence[StepRequest]) -> Trace | TraceRefusal:
    """Replay ``events`` from the initial state.

    Each request is ``(event name, binding)`` where the binding is a mapping
    of parameter values, a positional sequence, or ``None``. Parameters left
    open are filled in when exactly one enabled binding matches; several
    matches raise :class:`AmbiguousStepError`.
    """
    starts = init_states(machine, context_env)
    if not starts:
        raise Refusal("machine has no initial state")
    state = starts[0]
    steps: list[Step] = []
    known = {e.name: e for e in flat_events(machine)}
    for n, (name, given) in enumerate(events, start=1):
        if name not in known:
            raise ExplorationError(f"step {n}: unknown event {name!r}")
        params = [p.name for p in known[name].params]
        if given is None:
            wanted: dict[str, Any] = {}
        elif isinstance(given, dict):
            wanted = dict(given)
        else:
            if len(given) > len(params):
                raise ExplorationError(f"step {n}: {name} takes {len(params)} parameter(s)")
            wanted = dict(zip(params, given))
        unknown = set(wanted) - set(params)
        if unknown:
            raise ExplorationError(f"step {n}: {name} has no parameter {', '.join(sorted(unknown))}")
        enabled = enabled_events(machine, state, context_env)
        matches = [(ev, b) for ev, b in enabled
                   if ev.name == name and all(dict(b)[k] == v for k, v in wanted.items())]
        if not matches:
            return TraceRefusal(n, name, "not enabled", tuple(event_label(ev.name, b) for ev, b in enabled),
                                Trace(starts[0], tuple(steps)))
        if len(matches) > 1:
            cands = [event_label(ev.name, b) for ev, b in matches]
            raise AmbiguousStepError(f"step {n}: {name} is ambiguous; candidates: {', '.join(cands)}", cands)
        ev, b = matches[0]
        state = fire(machine, state, ev, b, context_env)
        steps.append(Step(ev.name, b, state))
    return Trace(starts[0], tuple(steps))


def parse_steps(text: str) -> list[tuple[str, "dict[str, Expr] | list[Expr] | None"]]:
    """Parse ``ev1(a, b), ev2(p=x) ev3`` into step requests with unevaluated
    argument expressions. Commas between steps are optional."""
    ts = TokenStream(tokenize(text, "<trace>"), "<trace>")
    ep = ExprParser(ts)
    steps: list = []
    while ts.tok.kind != "EOF":
        if ts.at(","):
            ts.next()
            continue
        name = ts.ident("event name").text
        args: dict | list | None = None
        if ts.at("("):
            ts.next()
            named: dict[str, Expr] = {}
            positional: list[Expr] = []
            while not ts.at(")"):
                if ts.tok.kind == "IDENT" and ts.peek().text == "=":
                    key = ts.next().text
                    ts.next()
                    named[key] = ep.override()
                else:
                    positional.append(ep.override())
                if not ts.at(")"):
                    ts.expect(",")
            ts.next()
            if named and positional:
                raise ts.error(f"{name}: mix of named and positional arguments")
            args = named if named else positional
        steps.append((name, args))
    return steps


def resolve_steps(steps, context_env: Universe) -> list[StepRequest]:
    """Evaluate step arguments against the constants of one universe."""
    env = context_env.env
    out: list[StepRequest] = []
    for name, args in steps:
        if args is None:
            out.append((name, None))
        elif isinstance(args, dict):
            out.append((name, {k: eval_expr(v, env) for k, v in args.items()}))
        else:
            out.append((name, [eval_expr(v, env) for v in args]))
    return out


# -- export ------------------------------------------------------------------

def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _dot_body(graph: StateGraph, prefix: str, show_bindings: bool, elide_synthetic: bool,
              indent: str) -> list[str]:
    lines = []
    for i in graph.initial:
        lines.append(f'{indent}{prefix}init{i} [shape=point, label=""];')
    for i, s in enumerate(graph.states):
        if show_bindings:
            label = "\\n".join(_dot_escape(f"{k}={render(v)}") for k, v in s.values)
        else:
            label = f"s{i}"
        extra = ", color=red" if i in graph.deadlocks else ""
        lines.append(f'{indent}{prefix}s{i} [label="{label}"{extra}];')
    for i in graph.initial:
        lines.append(f"{indent}{prefix}init{i} -> {prefix}s{i};")
    for t in graph.transitions:
        if t.synthetic and elide_synthetic:
            continue
        style = ", style=dashed" if t.synthetic else ""
        lines.append(f'{indent}{prefix}s{t.src} -> {prefix}s{t.dst} [label="{_dot_escape(t.label)}"{style}];')
    return lines


def export_dot(graphs: StateGraph | Sequence[StateGraph], *, show_bindings: bool = True,
               elide_synthetic: bool = False) -> str:
    """Deterministic Graphviz rendering. Several graphs (one per constant
    universe) are drawn as clusters of a single digraph."""
    if isinstance(graphs, StateGraph):
        graphs = [graphs]
    name = graphs[0].machine if graphs else "empty"
    lines = [f'digraph "{_dot_escape(name)}" {{',
             '  node [shape=box, fontname="monospace"];',
             '  edge [fontname="monospace"];']
    if any(g.truncated for g in graphs):
        lines.append('  label="truncated";')
    if len(graphs) == 1:
        lines.append(f"  // universe: {graphs[0].universe_id}")
        lines += _dot_body(graphs[0], "", show_bindings, elide_synthetic, "  ")
    else:
        for k, g in enumerate(graphs):
            lines.append(f"  subgraph cluster_u{k} {{")
            lines.append(f'    label="{_dot_escape(g.universe_id)}";')
            lines += _dot_body(g, f"u{k}_", show_bindings, elide_synthetic, "    ")
            lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_json(graph: StateGraph) -> dict:
    return {
        "machine": graph.machine,
        "universe": graph.universe_id,
        "truncated": graph.truncated,
        "states": [{"id": i, "bindings": _bindings_json(s)} for i, s in enumerate(graph.states)],
        "transitions": [
            {"src": t.src, "event": t.event, "binding": {k: to_json(v) for k, v in t.binding},
             "dst": t.dst, "synthetic": t.synthetic}
            for t in graph.transitions
        ],
        "initial": list(graph.initial),
        "deadlocks": sorted(graph.deadlocks),
    }


def export_json(graphs: StateGraph | Sequence[StateGraph]) -> str:
    if isinstance(graphs, StateGraph):
        graphs = [graphs]
    doc = {"machine": graphs[0].machine if graphs else None,
           "graphs": [graph_to_json(g) for g in graphs]}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"

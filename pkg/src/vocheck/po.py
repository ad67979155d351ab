"""Proof-obligation style checks: a predicate over all reachable states, or
inductively over every type-correct state."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any

from .errors import EvaluationFault, Refusal, WellDefinednessError
from .explorer import StateGraph, Trace
from .model.ast import Expr, Machine, show
from .model.semantics import (Binding, State, Universe, enabled_events, eval_expr, event_label,
                              fire, init_states)
from .model.types import cardinality, enumerate_values, to_json

REACHABLE = "REACHABLE"
INDUCTIVE = "INDUCTIVE"
DEFAULT_INDUCTIVE_BOUND = 1_000_000


@dataclass(frozen=True)
class InductiveWitness:
    """A step that leaves the predicate: ``pre`` satisfies it (and the
    invariants), ``post`` does not. ``pre`` is None for a failing initial state."""

    pre: State | None
    event: str
    binding: Binding
    post: State

    @property
    def label(self) -> str:
        return event_label(self.event, self.binding)

    def to_json(self) -> dict:
        return {
            "pre": None if self.pre is None else {k: to_json(v) for k, v in self.pre.values},
            "event": self.event,
            "binding": {k: to_json(v) for k, v in self.binding},
            "post": {k: to_json(v) for k, v in self.post.values},
        }


@dataclass(frozen=True)
class PoVerdict:
    holds: bool
    mode: str
    universe_id: str
    witness: Trace | InductiveWitness | None = None
    label: str | None = None
    states_checked: int = 0


def _holds(p: Expr, state: State, env: dict) -> bool:
    try:
        v = eval_expr(p, {**env, **state.bindings})
    except EvaluationFault as exc:
        raise WellDefinednessError(f"predicate {show(p)} is not well-defined in state {state}: {exc}",
                                   state) from exc
    if not isinstance(v, bool):
        raise WellDefinednessError(f"predicate {show(p)} is not boolean", state)
    return v


def check_reachable(graph: StateGraph, p: Expr, *, label: str | None = None) -> PoVerdict:
    """``p`` must hold in every reachable state; the witness is the BFS-shortest
    trace to the first violating state."""
    if graph.truncated:
        raise Refusal(f"state space of {graph.machine} was truncated; cannot establish a "
                      "predicate over all reachable states")
    for i, s in enumerate(graph.states):
        if not _holds(p, s, graph.env):
            return PoVerdict(False, REACHABLE, graph.universe_id, graph.trace_to(i), label, i + 1)
    return PoVerdict(True, REACHABLE, graph.universe_id, None, label, len(graph.states))


def check_machine_invariants(machine: Machine, graph: StateGraph) -> list[PoVerdict]:
    return [check_reachable(graph, inv.expr, label=inv.label) for inv in machine.invariants]


def type_correct_states(machine: Machine, bound: int = DEFAULT_INDUCTIVE_BOUND):
    """All assignments of the variables within their types, lexicographic in
    (variable name, value order). Refuses above ``bound`` states."""
    variables = sorted(machine.variables, key=lambda v: v.name)
    total = 1
    for v in variables:
        total *= cardinality(v.type)
        if total > bound:
            raise Refusal(f"{machine.name} has more than {bound} type-correct states; "
                          "use mode=reachable instead")
    names = [v.name for v in variables]
    domains = [list(enumerate_values(v.type)) for v in variables]
    for combo in itertools.product(*domains):
        yield State(tuple(zip(names, combo)))


def _satisfies_all(exprs: list[Expr], state: State, env: dict) -> bool:
    scope = {**env, **state.bindings}
    try:
        return all(eval_expr(e, scope) is True for e in exprs)
    except EvaluationFault:
        return False


def check_inductive(machine: Machine, context_env: Universe, p: Expr, *,
                    bound: int = DEFAULT_INDUCTIVE_BOUND, label: str | None = None) -> PoVerdict:
    """Initialisation establishes ``p`` and every enabled step from a
    type-correct state satisfying the invariants and ``p`` preserves it.

    States are visited in lexicographic order, so the reported witness is the
    least violating pre-state.
    """
    env = context_env.env
    for s in init_states(machine, context_env):
        if not _holds(p, s, env):
            return PoVerdict(False, INDUCTIVE, context_env.id,
                             InductiveWitness(None, machine.init.name, (), s), label, 0)
    invariants = [i.expr for i in machine.invariants]
    checked = 0
    for s in type_correct_states(machine, bound):
        checked += 1
        if not _satisfies_all(invariants, s, env) or not _holds(p, s, env):
            continue
        for ev, binding in enabled_events(machine, s, context_env):
            try:
                t = fire(machine, s, ev, binding, context_env)
            except EvaluationFault as exc:
                raise WellDefinednessError(
                    f"action of {event_label(ev.name, binding)} is not well-defined in {s}: {exc}",
                    s) from exc
            if not _holds(p, t, env):
                return PoVerdict(False, INDUCTIVE, context_env.id,
                                 InductiveWitness(s, ev.name, binding, t), label, checked)
    return PoVerdict(True, INDUCTIVE, context_env.id, None, label, checked)


def parse_po_parameters(text: str) -> tuple[str, str | None]:
    """Split ``expr [; mode=reachable|inductive]`` into the expression text and
    the requested mode (None when absent)."""
    body, sep, tail = text.rpartition(";")
    if sep and tail.strip().replace(" ", "").lower().startswith("mode="):
        mode = tail.split("=", 1)[1].strip().upper()
        if mode not in (REACHABLE, INDUCTIVE):
            raise ValueError(f"unknown PO mode {mode.lower()!r} (expected reachable or inductive)")
        return body.strip(), mode
    return text.strip(), None


def witness_json(w: Any) -> dict:
    if isinstance(w, Trace):
        return {"kind": "trace", "trace": w.to_json()}
    return {"kind": "witness", "witness": w.to_json()}

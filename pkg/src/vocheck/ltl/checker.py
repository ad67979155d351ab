"""Automata-theoretic LTL checking over an explored state graph."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Iterator

from ..errors import EvaluationFault, Refusal, WellDefinednessError
from ..explorer import Lasso, StateGraph
from ..model.ast import Machine
from ..model.semantics import eval_expr, flat_events
from ..model.typecheck import check_predicate, machine_scope
from .buchi import Buchi, to_buchi
from .formula import Enabled, Executed, Formula, Not, StatePred, atoms, event_names


@dataclass(frozen=True)
class LtlVerdict:
    holds: bool
    universe_id: str
    counterexample: Lasso | None = None
    automaton_states: int = 0
    product_states: int = 0


class AtomEvaluator:
    """Truth of atoms at a path position ``(state, outgoing transition)``,
    memoized per graph."""

    def __init__(self, graph: StateGraph):
        self.graph = graph
        self._state_cache: dict[tuple[int, Any], bool] = {}
        self._enabled: list[frozenset[str]] = [
            frozenset(t.event for t in graph.successors(i, synthetic=False))
            for i in range(len(graph.states))
        ]

    def state_pred(self, index: int, atom: StatePred) -> bool:
        key = (index, atom)
        hit = self._state_cache.get(key)
        if hit is not None:
            return hit
        state = self.graph.states[index]
        env = {**self.graph.env, **state.bindings}
        try:
            value = eval_expr(atom.expr, env)
        except EvaluationFault as exc:
            raise WellDefinednessError(f"state predicate {atom} is not well-defined: {exc}",
                                       state) from exc
        if not isinstance(value, bool):
            raise WellDefinednessError(f"state predicate {atom} is not boolean", state)
        self._state_cache[key] = value
        return value

    def literal(self, lit: Formula, index: int, transition) -> bool:
        if isinstance(lit, Not):
            return not self.literal(lit.arg, index, transition)
        if isinstance(lit, StatePred):
            return self.state_pred(index, lit)
        if isinstance(lit, Enabled):
            return lit.event in self._enabled[index]
        if isinstance(lit, Executed):
            return transition.event == lit.event and not transition.synthetic
        raise TypeError(lit)


def check_ltl(graph: StateGraph, formula: Formula) -> LtlVerdict:
    """Decide whether every infinite path of ``graph`` satisfies ``formula``.

    Deadlock states carry a synthetic self-loop, so finite behaviour is
    judged as stuttering in the final state with no event executed.
    A truncated graph cannot support a verdict and raises :class:`Refusal`.
    """
    if graph.truncated:
        raise Refusal(f"state space of {graph.machine} was truncated; LTL verdict unavailable")
    automaton = to_buchi(Not(formula))
    ev = AtomEvaluator(graph)
    product = _Product(graph, automaton, ev)
    seed = product.find_accepting_cycle()
    if seed is None:
        return LtlVerdict(True, graph.universe_id, None, automaton.n_states, product.size)
    lasso = product.lasso(seed)
    return LtlVerdict(False, graph.universe_id, lasso, automaton.n_states, product.size)


Node = tuple[int, int]  # (graph state, automaton state)


class _Product:
    def __init__(self, graph: StateGraph, automaton: Buchi, ev: AtomEvaluator):
        self.g = graph
        self.a = automaton
        self.ev = ev
        self._succ: dict[Node, list[tuple[Node, int]]] = {}

    @property
    def size(self) -> int:
        return len(self._succ)

    def initial(self) -> list[Node]:
        return [(s, self.a.initial) for s in self.g.initial]

    def successors(self, node: Node) -> list[tuple[Node, int]]:
        hit = self._succ.get(node)
        if hit is not None:
            return hit
        s, q = node
        out = []
        for ti in self.g.outgoing[s]:
            t = self.g.transitions[ti]
            for label, q2 in self.a.out[q]:
                if all(self.ev.literal(lit, s, t) for lit in sorted(label, key=str)):
                    out.append(((t.dst, q2), ti))
        self._succ[node] = out
        return out

    def accepting(self, node: Node) -> bool:
        return node[1] in self.a.accepting

    def find_accepting_cycle(self) -> Node | None:
        """Nested depth-first search; returns an accepting node on a cycle."""
        outer: set[Node] = set()
        inner: set[Node] = set()
        for root in self.initial():
            if root in outer:
                continue
            outer.add(root)
            stack: list[tuple[Node, Iterator]] = [(root, iter(self.successors(root)))]
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt, _ in it:
                    if nxt not in outer:
                        outer.add(nxt)
                        stack.append((nxt, iter(self.successors(nxt))))
                        advanced = True
                        break
                if advanced:
                    continue
                stack.pop()
                if self.accepting(node) and self._reaches(node, inner):
                    return node
        return None

    def _reaches(self, seed: Node, visited: set[Node]) -> bool:
        stack = [seed]
        while stack:
            node = stack.pop()
            for nxt, _ in self.successors(node):
                if nxt == seed:
                    return True
                if nxt not in visited:
                    visited.add(nxt)
                    stack.append(nxt)
        return False

    def _bfs(self, sources: list[Node], target: Node, *, nonempty: bool) -> list[int]:
        parent: dict[Node, tuple[Node, int] | None] = {}
        q: deque[Node] = deque()
        for s in sources:
            if s not in parent:
                parent[s] = None
                q.append(s)
        if not nonempty and target in parent:
            return []
        while q:
            node = q.popleft()
            for nxt, ti in self.successors(node):
                if nxt == target:
                    path = [ti]
                    cur = node
                    while parent[cur] is not None:
                        cur, t = parent[cur][0], parent[cur][1]
                        path.append(t)
                    return path[::-1]
                if nxt not in parent:
                    parent[nxt] = (node, ti)
                    q.append(nxt)
        raise AssertionError("target not reachable")

    def best_seed(self, found: Node) -> Node:
        """Among accepting nodes on a cycle, the one closest to an initial node
        (ties: shorter cycle, then discovery order). ``found`` is the seed the
        nested search produced, so at least one candidate exists."""
        order: list[Node] = []
        dist: dict[Node, int] = {}
        q: deque[Node] = deque()
        for s in self.initial():
            if s not in dist:
                dist[s] = 0
                q.append(s)
        while q:
            node = q.popleft()
            order.append(node)
            for nxt, _ in self.successors(node):
                if nxt not in dist:
                    dist[nxt] = dist[node] + 1
                    q.append(nxt)
        best, best_key = found, None
        for node in order:
            if best_key is not None and dist[node] > best_key[0]:
                break
            if not self.accepting(node):
                continue
            cycle = self._cycle_length(node)
            if cycle is not None and (best_key is None or (dist[node], cycle) < best_key):
                best, best_key = node, (dist[node], cycle)
        return best

    def _cycle_length(self, seed: Node) -> int | None:
        dist = {seed: 0}
        q: deque[Node] = deque([seed])
        while q:
            node = q.popleft()
            for nxt, _ in self.successors(node):
                if nxt == seed:
                    return dist[node] + 1
                if nxt not in dist:
                    dist[nxt] = dist[node] + 1
                    q.append(nxt)
        return None

    def lasso(self, seed: Node) -> Lasso:
        seed = self.best_seed(seed)
        inits = self.initial()
        prefix = self._bfs(inits, seed, nonempty=False)
        cycle = self._bfs([seed], seed, nonempty=True)
        start = self.g.transitions[prefix[0]].src if prefix else seed[0]
        return Lasso(self.g.trace_of(start, prefix), self.g.trace_of(seed[0], cycle))


def check_all(graphs: list[StateGraph], formula: Formula) -> list[LtlVerdict]:
    return [check_ltl(g, formula) for g in graphs]


def validate_formula(formula: Formula, machine: Machine) -> list[str]:
    """Static problems: unknown events and ill-typed state predicates."""
    problems = []
    known = {e.name for e in flat_events(machine)}
    for name in sorted(event_names(formula) - known):
        problems.append(f"unknown event {name!r} in formula")
    scope = machine_scope(machine)
    for a in atoms(formula):
        if isinstance(a, StatePred):
            msg = check_predicate(a.expr, scope)
            if msg:
                problems.append(f"in {a}: {msg}")
    return problems

"""Reference semantics for testing the automaton-based checker.

Formulas are evaluated directly (no normalization, no automata) on ultimately
periodic paths. A lasso of ``n`` positions with loop start ``j`` is evaluated
bottom-up as one bitmask per subformula; ``U`` and ``F`` are least fixpoints,
``R`` and ``G`` greatest fixpoints of the one-step successor map.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from ..errors import Refusal
from ..explorer import Lasso, StateGraph
from .checker import AtomEvaluator
from .formula import (After, And, BoolConst, Enabled, Executed, Finally, Formula, Globally,
                      Implies, Next, Not, Or, Release, StatePred, Until)


def eval_lasso(f: Formula, n: int, loop: int, atom: Callable[[Formula, int], bool]) -> bool:
    """Truth of ``f`` at position 0 of the infinite word ``w[0..loop-1] (w[loop..n-1])^ω``.

    ``atom(a, i)`` gives the truth of atom ``a`` at position ``i < n``.
    """
    if not 0 <= loop < n:
        raise ValueError("loop start must index a position of the lasso")
    full = (1 << n) - 1
    succ = [i + 1 if i + 1 < n else loop for i in range(n)]

    def pre(mask: int) -> int:
        # positions whose successor lies in mask
        out = 0
        for i in range(n):
            if mask >> succ[i] & 1:
                out |= 1 << i
        return out

    memo: dict[Formula, int] = {}

    def ev(g: Formula) -> int:
        if g in memo:
            return memo[g]
        if isinstance(g, BoolConst):
            r = full if g.value else 0
        elif isinstance(g, (StatePred, Enabled, Executed)):
            r = 0
            for i in range(n):
                if atom(g, i):
                    r |= 1 << i
        elif isinstance(g, Not):
            r = full & ~ev(g.arg)
        elif isinstance(g, And):
            r = ev(g.left) & ev(g.right)
        elif isinstance(g, Or):
            r = ev(g.left) | ev(g.right)
        elif isinstance(g, Implies):
            r = (full & ~ev(g.left)) | ev(g.right)
        elif isinstance(g, Next):
            r = pre(ev(g.arg))
        elif isinstance(g, Until):
            r = _lfp(ev(g.left), ev(g.right), pre)
        elif isinstance(g, Finally):
            r = _lfp(full, ev(g.arg), pre)
        elif isinstance(g, Release):
            r = _gfp(ev(g.left), ev(g.right), pre, full)
        elif isinstance(g, Globally):
            r = _gfp(0, ev(g.arg), pre, full)
        elif isinstance(g, After):
            # whenever ev is executed, the body holds at that position
            body = (full & ~ev(Executed(g.event))) | ev(g.arg)
            r = _gfp(0, body, pre, full)
        else:
            raise TypeError(g)
        memo[g] = r
        return r

    return bool(ev(f) & 1)


def _lfp(a: int, b: int, pre) -> int:
    # a U b = mu Z. b or (a and X Z)
    z = 0
    while True:
        nz = b | (a & pre(z))
        if nz == z:
            return z
        z = nz


def _gfp(a: int, b: int, pre, full: int) -> int:
    # a R b = nu Z. b and (a or X Z)
    z = full
    while True:
        nz = b & (a | pre(z))
        if nz == z:
            return z
        z = nz


@dataclass(frozen=True)
class OracleResult:
    holds: bool
    lassos_checked: int
    witness: tuple[tuple[int, ...], int] | None = None  # (transition indices, loop start)


def _graph_atom(graph: StateGraph, ev: AtomEvaluator, path: Sequence[int]):
    def atom(a: Formula, i: int) -> bool:
        t = graph.transitions[path[i]]
        return ev.literal(a, t.src, t)
    return atom


def lasso_holds(graph: StateGraph, f: Formula, path: Sequence[int], loop: int,
                ev: AtomEvaluator | None = None) -> bool:
    """Evaluate ``f`` on the graph lasso given by transition indices."""
    ev = ev or AtomEvaluator(graph)
    return eval_lasso(f, len(path), loop, _graph_atom(graph, ev, path))


def lasso_of(graph: StateGraph, lasso: Lasso) -> tuple[list[int], int]:
    """Transition indices and loop start of a checker counterexample."""
    index = {}
    for ti, t in enumerate(graph.transitions):
        index.setdefault((graph.states[t.src], t.event, t.binding, graph.states[t.dst]), ti)
    path = []
    for trace in (lasso.prefix, lasso.cycle):
        cur = trace.start
        for st in trace.steps:
            path.append(index[(cur, st.event, st.binding, st.state)])
            cur = st.state
    return path, len(lasso.prefix.steps)


def oracle_check(graph: StateGraph, f: Formula, bound: int | None = None) -> OracleResult:
    """Check ``f`` on every lasso of at most ``bound`` transitions starting in
    an initial state. ``bound`` defaults to the number of states plus two and
    may not be smaller than the number of states."""
    if graph.truncated:
        raise Refusal("oracle needs a complete state graph")
    n_states = len(graph.states)
    if bound is None:
        bound = n_states + 2
    if bound < n_states:
        raise Refusal(f"bound {bound} is below the number of states ({n_states})")
    ev = AtomEvaluator(graph)
    checked = 0
    stack: list[tuple[int, list[int]]] = [(s, []) for s in reversed(graph.initial)]
    while stack:
        state, path = stack.pop()
        if path:
            # close the loop at every earlier position starting in `state`
            for j in range(len(path)):
                if graph.transitions[path[j]].src == state:
                    checked += 1
                    if not lasso_holds(graph, f, path, j, ev):
                        return OracleResult(False, checked, (tuple(path), j))
        if len(path) < bound:
            for ti in reversed(graph.outgoing[state]):
                stack.append((graph.transitions[ti].dst, path + [ti]))
    return OracleResult(True, checked)

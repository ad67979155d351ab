"""Random small state graphs and LTL formulas shared by the property and
acceptance tests."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from vocheck.explorer import StateGraph, Transition
from vocheck.ltl.formula import (After, And, BoolConst, Enabled, Executed, Finally, Globally,
                                 Implies, Next, Not, Or, Release, StatePred, Until)
from vocheck.model.ast import Name
from vocheck.model.semantics import State

EVENTS = ("a", "b")
ATOMS = (StatePred(Name("p")), StatePred(Name("q")), Enabled("a"), Enabled("b"),
         Executed("a"), Executed("b"), BoolConst(True))


def make_graph(n: int, edges, valuation, initial=(0,)) -> StateGraph:
    """Graph over states 0..n-1 where state i has p, q from ``valuation[i]``
    and a counter ``n`` that keeps states distinct."""
    states = [State.of({"n": i, "p": valuation[i][0], "q": valuation[i][1]}) for i in range(n)]
    ts = [Transition(s, ev, (), d) for s, ev, d in edges]
    return StateGraph.build("random", states, ts, initial, EVENTS)


def random_graph(rng: random.Random, max_states: int = 6) -> StateGraph:
    n = rng.randint(1, max_states)
    valuation = [(rng.random() < 0.5, rng.random() < 0.5) for _ in range(n)]
    edges = []
    for s in range(n):
        for _ in range(rng.randint(0, 2)):
            edges.append((s, rng.choice(EVENTS), rng.randrange(n)))
    edges = sorted(set(edges))
    return make_graph(n, edges, valuation)


def random_formula(rng: random.Random, depth: int = 3, nesting: int = 5):
    """A formula with temporal depth at most ``depth`` and operator nesting
    at most ``nesting``."""
    r = rng.random()
    if nesting == 0 or r < 0.25 or (depth == 0 and r < 0.6):
        return rng.choice(ATOMS)
    sub = nesting - 1
    if depth == 0 or r < 0.5:
        op = rng.choice(("not", "and", "or", "implies"))
        if op == "not":
            return Not(random_formula(rng, depth, sub))
        cls = {"and": And, "or": Or, "implies": Implies}[op]
        return cls(random_formula(rng, depth, sub), random_formula(rng, depth, sub))
    op = rng.choice(("X", "G", "F", "U", "R", "after"))
    if op in ("X", "G", "F"):
        return {"X": Next, "G": Globally, "F": Finally}[op](random_formula(rng, depth - 1, sub))
    if op == "after":
        return After(rng.choice(EVENTS), random_formula(rng, depth - 1, sub))
    cls = Until if op == "U" else Release
    return cls(random_formula(rng, depth - 1, sub), random_formula(rng, depth - 1, sub))


# hypothesis flavours of the same generators

@st.composite
def graphs(draw, max_states: int = 6):
    n = draw(st.integers(1, max_states))
    valuation = draw(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=n, max_size=n))
    edges = []
    for s in range(n):
        k = draw(st.integers(0, 2))
        for _ in range(k):
            edges.append((s, draw(st.sampled_from(EVENTS)), draw(st.integers(0, n - 1))))
    return make_graph(n, sorted(set(edges)), valuation)


def formulas(depth: int = 3):
    """Formulas of operator nesting at most ``depth``."""
    atoms = st.sampled_from(ATOMS)
    if depth == 0:
        return atoms
    sub = formulas(depth - 1)
    return st.one_of(
        atoms,
        sub.map(Next), sub.map(Globally), sub.map(Finally), sub.map(Not),
        st.tuples(sub, sub).map(lambda t: Until(*t)),
        st.tuples(sub, sub).map(lambda t: Release(*t)),
        st.tuples(sub, sub).map(lambda t: And(*t)),
        st.tuples(sub, sub).map(lambda t: Or(*t)),
        st.tuples(sub, sub).map(lambda t: Implies(*t)),
        st.tuples(st.sampled_from(EVENTS), sub).map(lambda t: After(*t)),
    )


# -- small random machines for proof-obligation checks --------------------------

_VARS = {"x": "0..3", "y": "0..2", "b": "BOOL"}


def _int_atom(rng: random.Random, extra=()) -> str:
    return rng.choice(["x", "y", str(rng.randint(0, 3))] + list(extra))


def random_predicate(rng: random.Random, depth: int = 2, extra=()) -> str:
    r = rng.random()
    if depth == 0 or r < 0.4:
        kind = rng.randrange(3)
        if kind == 0:
            return f"{_int_atom(rng, extra)} {rng.choice(['=', '/=', '<', '<=', '>', '>='])} {_int_atom(rng, extra)}"
        if kind == 1:
            return f"b = {rng.choice(['TRUE', 'FALSE'])}"
        lo = rng.randint(0, 2)
        return f"{_int_atom(rng, extra)} ∈ {lo}..{rng.randint(lo, 3)}"
    op = rng.choice(["and", "or", "=>", "not"])
    if op == "not":
        return f"not({random_predicate(rng, depth - 1, extra)})"
    return f"({random_predicate(rng, depth - 1, extra)}) {op} ({random_predicate(rng, depth - 1, extra)})"


def _random_action(rng: random.Random, var: str, params) -> tuple[str, str]:
    """An assignment that stays within the variable's type, plus the guard
    it needs to do so."""
    if var == "b":
        return rng.choice(["TRUE", "FALSE"]), "1 = 1"
    hi = 3 if var == "x" else 2
    choice = rng.randrange(4)
    if choice == 0:
        return str(rng.randint(0, hi)), "1 = 1"
    if choice == 1:
        return f"{var} + 1", f"{var} < {hi}"
    if choice == 2:
        return f"{var} - 1", f"{var} > 0"
    src = rng.choice(["y"] + list(params))
    return src, f"{src} <= {hi}"


def random_machine(rng: random.Random) -> str:
    init = {"x": rng.randint(0, 3), "y": rng.randint(0, 2), "b": rng.choice(["TRUE", "FALSE"])}
    lines = ["machine R", "variables"] + [f"  {v} : {t}" for v, t in _VARS.items()]
    lines += ["init"] + [f"  @i{k} {v} := {init[v]}" for k, v in enumerate(_VARS)] + ["end"]
    for e in range(rng.randint(1, 3)):
        params = ["p"] if rng.random() < 0.4 else []
        lines.append(f"event e{e}")
        if params:
            lines += ["  any p : 0..2"]
        guards = [random_predicate(rng, 1, params)] if rng.random() < 0.7 else []
        targets = rng.sample(list(_VARS), rng.randint(1, 2))
        actions = []
        for v in targets:
            rhs, guard = _random_action(rng, v, params)
            actions.append(f"{v} := {rhs}")
            if guard != "1 = 1":
                guards.append(guard)
        if guards:
            lines += ["  where"] + [f"    @g{k} {g}" for k, g in enumerate(guards)]
        lines += ["  then"] + [f"    @a{k} {a}" for k, a in enumerate(actions)] + ["end"]
    lines.append("end")
    return "\n".join(lines) + "\n"


def with_invariants(source: str, invariants: list[str]) -> str:
    if not invariants:
        return source
    block = "invariants\n" + "".join(f"  @inv{k} {inv}\n" for k, inv in enumerate(invariants))
    return source.replace("init\n", block + "init\n", 1)


def random_po_case(rng: random.Random):
    """(machine, universe, predicate) where the machine's invariants hold in
    every reachable state, as they would after being proved."""
    from vocheck.explorer import explore
    from vocheck.model.parser import parse_expr
    from vocheck.model.project import parse_project
    from vocheck.model.semantics import eval_expr, universes

    src = random_machine(rng)
    m = parse_project([("r.ebs", src)]).machine("R")
    (u,) = universes(m)
    g = explore(m, u)
    kept = []
    for _ in range(rng.randint(0, 2)):
        inv = random_predicate(rng, 1)
        e = parse_expr(inv)
        if all(eval_expr(e, {**u.env, **s.bindings}) for s in g.states):
            kept.append(inv)
    m = parse_project([("r.ebs", with_invariants(src, kept))]).machine("R")
    return m, universes(m)[0], parse_expr(random_predicate(rng, 2))

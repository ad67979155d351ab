import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import build
from generators import ATOMS, formulas, graphs, make_graph, random_formula, random_graph
from vocheck.errors import LtlSyntaxError, Refusal, WellDefinednessError
from vocheck.explorer import StateGraph, Transition, explore, explore_all
from vocheck.ltl import check_ltl, eval_lasso, normalize, oracle_check, parse_ltl, to_buchi
from vocheck.ltl.formula import (FALSE, TRUE, After, And, BoolConst, Enabled, Executed, Finally,
                                 Globally, Implies, Next, Not, Or, StatePred, Until,
                                 is_nnf)
from vocheck.ltl.checker import validate_formula
from vocheck.ltl.oracle import lasso_holds, lasso_of
from vocheck.model.ast import Name
from vocheck.model.semantics import universes

P, Q = StatePred(Name("p")), StatePred(Name("q"))
SEC1 = "G({loggedIn = yes} => e(startSystem))"
FUN2 = "[startSystem] X(G(not(login)))"


# -- parsing -----------------------------------------------------------------

def test_parse_sec1():
    f = parse_ltl(SEC1)
    assert isinstance(f, Globally) and isinstance(f.arg, Implies)
    assert isinstance(f.arg.left, StatePred) and f.arg.right == Enabled("startSystem")


def test_parse_fun2():
    f = parse_ltl(FUN2)
    assert f == After("startSystem", Next(Globally(Not(Executed("login")))))


def test_parse_constants_and_bare_brackets():
    assert parse_ltl("G(true)") == Globally(BoolConst(True))
    assert parse_ltl("G([a] => {p})") == Globally(Implies(Executed("a"), P))
    assert parse_ltl("{p} U {q} U {p}") == Until(P, Until(Q, P))
    assert parse_ltl("not {p} and {q} or {p}") == Or(And(Not(P), Q), P)


@pytest.mark.parametrize("text", ["G(", "{p} U", "G({p}", "X", "{p} {q}", ""])
def test_syntax_errors_carry_offsets(text):
    with pytest.raises(LtlSyntaxError) as exc:
        parse_ltl(text)
    assert 0 <= exc.value.pos <= len(text)


def test_unknown_operator():
    with pytest.raises(LtlSyntaxError, match="unknown operator"):
        parse_ltl("H({p})")


def test_printing_round_trips():
    for text in (SEC1, FUN2, "({p} R {q}) U X(e(a))", "F(G(not(a)))"):
        f = parse_ltl(text)
        assert parse_ltl(str(f)) == f


# -- normalization -----------------------------------------------------------

def test_not_globally_becomes_true_until():
    assert normalize(Not(Globally(P))) == Until(TRUE, Not(P))


@given(formulas(3))
def test_normalize_is_nnf_and_idempotent(f):
    n = normalize(f)
    assert is_nnf(n)
    assert normalize(n) == n


def lasso_words(atoms, max_len):
    for n in range(1, max_len + 1):
        for letters in itertools.product(itertools.product([False, True], repeat=len(atoms)), repeat=n):
            for loop in range(n):
                yield n, loop, letters


def word_atom(atoms, letters):
    return lambda a, i: letters[i][atoms.index(a)]


@given(formulas(3))
@settings(max_examples=60, deadline=None)
def test_normalize_preserves_semantics(f):
    atoms = list(ATOMS)
    n = normalize(f)
    rng = random.Random(str(f))
    for _ in range(40):
        size = rng.randint(1, 4)
        letters = [tuple(rng.random() < 0.5 for _ in atoms) for _ in range(size)]
        loop = rng.randrange(size)
        atom = word_atom(atoms, letters)
        assert eval_lasso(f, size, loop, atom) == eval_lasso(n, size, loop, atom)


def test_negated_bracket_expands_then_normalizes():
    f = normalize(Not(parse_ltl("[a] {p}")))
    assert f == Until(TRUE, And(Executed("a"), Not(P)))


# -- automata ----------------------------------------------------------------

def buchi_accepts(b, n, loop, atom):
    """Independent acceptance test of a lasso word by a Büchi automaton."""
    succ = [i + 1 if i + 1 < n else loop for i in range(n)]

    def moves(node):
        q, i = node
        for lab, d in b.out[q]:
            if all((not atom(l.arg, i)) if isinstance(l, Not) else atom(l, i) for l in lab):
                yield (d, succ[i])

    def reach(start):
        seen, work = set(), [start]
        while work:
            for m in moves(work.pop()):
                if m not in seen:
                    seen.add(m)
                    work.append(m)
        return seen

    reachable = reach((b.initial, 0)) | {(b.initial, 0)}
    return any(v[0] in b.accepting and v in reach(v) for v in reachable)


def test_globally_is_one_accepting_state():
    b = to_buchi(Globally(P))
    assert b.n_states == 1 and b.accepting == {0}
    assert b.edges == ((0, frozenset({P}), 0),)


def test_until_has_two_states():
    b = to_buchi(Until(P, Q))
    assert b.n_states == 2


def test_false_has_empty_language():
    b = to_buchi(FALSE)
    atoms = [P]
    assert not any(buchi_accepts(b, n, loop, word_atom(atoms, letters))
                   for n, loop, letters in lasso_words(atoms, 3))


def test_until_language_matches_path_semantics_up_to_length_8():
    atoms = [P, Q]
    f = Until(P, Q)
    b = to_buchi(f)
    for n, loop, letters in lasso_words(atoms, 4):
        atom = word_atom(atoms, letters)
        assert buchi_accepts(b, n, loop, atom) == eval_lasso(f, n, loop, atom)
    rng = random.Random(8)
    for _ in range(300):  # longer words by sampling
        n = rng.randint(5, 8)
        letters = [(rng.random() < 0.6, rng.random() < 0.2) for _ in range(n)]
        loop = rng.randrange(n)
        atom = word_atom(atoms, letters)
        assert buchi_accepts(b, n, loop, atom) == eval_lasso(f, n, loop, atom)


@given(formulas(3), st.data())
@settings(max_examples=80, deadline=None)
def test_automaton_language_matches_path_semantics(f, data):
    atoms = list(ATOMS)
    b = to_buchi(f)
    for lab in (lab for _, lab, _ in b.edges):
        assert not any(Not(l) in lab for l in lab)  # labels are satisfiable
    for _ in range(10):
        n = data.draw(st.integers(1, 4))
        letters = data.draw(st.lists(st.tuples(*[st.booleans()] * len(atoms)), min_size=n, max_size=n))
        loop = data.draw(st.integers(0, n - 1))
        atom = word_atom(atoms, letters)
        assert buchi_accepts(b, n, loop, atom) == eval_lasso(f, n, loop, atom)


# -- model checking ----------------------------------------------------------

def test_sec1_holds_on_m1(corpus):
    (g,) = explore_all(corpus.machine("m1"))
    assert check_ltl(g, parse_ltl(SEC1)).holds


def test_sec1_fails_on_m2_with_maintenance_login(corpus):
    m2 = corpus.machine("m2")
    for g in explore_all(m2):
        v = check_ltl(g, parse_ltl(SEC1))
        assert not v.holds
        role = g.universe.env["roleMap"]
        ids = [dict(s.binding)["id"] for s in v.counterexample.prefix.steps + v.counterexample.cycle.steps
               if s.event == "login"]
        assert "maintenance" in {role.lookup(i).name for i in ids}


def test_trivial_verdicts(corpus):
    (g,) = explore_all(corpus.machine("m1"))
    assert check_ltl(g, parse_ltl("G(true)")).holds
    v = check_ltl(g, parse_ltl("F(false)"))
    assert not v.holds and len(v.counterexample.cycle) >= 1


def test_truncated_graph_is_refused(corpus):
    g = explore(corpus.machine("m1"), universes(corpus.machine("m1"))[0], max_states=1)
    with pytest.raises(Refusal):
        check_ltl(g, parse_ltl(SEC1))


def test_ill_defined_state_predicate_raises():
    ctx = "context C sets A = {a, b} end"
    m = "machine M sees C variables f : A +-> BOOL init @i f := {a |-> TRUE} end end"
    (g,) = explore_all(build(ctx, m).machine("M"))
    with pytest.raises(WellDefinednessError):
        check_ltl(g, parse_ltl("G({f(b) = TRUE})"))


def test_validate_formula_reports_static_problems(corpus):
    m1 = corpus.machine("m1")
    assert validate_formula(parse_ltl(SEC1), m1) == []
    problems = validate_formula(parse_ltl("G(logout) and {loggedIn = 3}"), m1)
    assert len(problems) == 2 and "logout" in problems[0]


def test_oracle_trivial_and_bound(corpus):
    g = make_graph(1, [(0, "a", 0)], [(True, False)])
    assert oracle_check(g, Globally(P)).holds
    big = make_graph(3, [(0, "a", 1), (1, "a", 2), (2, "a", 0)], [(True, True)] * 3)
    with pytest.raises(Refusal):
        oracle_check(big, Globally(P), bound=2)


SEC2 = ("G(e(startSystem) => {treatmentAllowed(loggedInID) = doctors} "
        "or {treatmentAllowed(loggedInID) = nurses})")
CORPUS_CASES = [(m, f) for m in ("m1", "m2", "m2Concrete")
                for f in (SEC1, FUN2, SEC2, "G({loggedIn = yes} => F(startSystem))", "F(G(not(login)))")
                if not (m == "m1" and f == SEC2)]


@pytest.mark.parametrize("machine, text", CORPUS_CASES)
def test_corpus_formulas_agree_with_oracle(corpus, machine, text):
    m = corpus.machine(machine)
    f = parse_ltl(text)
    assert validate_formula(f, m) == []
    for g in explore_all(m):
        assert check_ltl(g, f).holds == oracle_check(g, f).holds


def assert_valid_counterexample(g, f, v):
    path, loop = lasso_of(g, v.counterexample)  # raises if a step is not a graph transition
    assert path, "lasso must be nonempty"
    cyc = path[loop:]
    assert cyc and g.transitions[cyc[-1]].dst == g.transitions[cyc[0]].src
    assert g.transitions[path[0]].src in g.initial
    for a, b in zip(path, path[1:]):
        assert g.transitions[a].dst == g.transitions[b].src
    assert not lasso_holds(g, f, path, loop)


@given(graphs(), formulas(3))
@settings(max_examples=150, deadline=None)
def test_checker_agrees_with_oracle(g, f):
    v = check_ltl(g, f)
    assert v.holds == oracle_check(g, f).holds
    if not v.holds:
        assert_valid_counterexample(g, f, v)


@given(graphs(), st.sampled_from([P, Q, Executed("a"), Enabled("b")]))
@settings(max_examples=100, deadline=None)
def test_globally_dual_of_not_finally_not(g, p):
    assert check_ltl(g, Globally(p)).holds == check_ltl(g, Not(Finally(Not(p)))).holds


@given(st.integers(1, 5), st.data(), formulas(2))
@settings(max_examples=100, deadline=None)
def test_totalization_is_monotone_on_deadlock_free_graphs(n, data, f):
    vals = data.draw(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=n, max_size=n))
    edges = sorted({(s, data.draw(st.sampled_from("ab")), data.draw(st.integers(0, n - 1))) for s in range(n)})
    g1 = make_graph(n, edges, vals)
    states = g1.states
    ts = [Transition(s, ev, (), d) for s, ev, d in edges]
    g2 = StateGraph.build("random", states, ts, (0,), ("a", "b"), totalize=False)
    assert not g1.deadlocks and g1.transitions == g2.transitions
    assert check_ltl(g1, f).holds == check_ltl(g2, f).holds


@given(st.integers(1, 5), st.data(), formulas(3))
@settings(max_examples=100, deadline=None)
def test_exactly_one_of_f_and_not_f_fails_on_a_single_path(n, data, f):
    vals = data.draw(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=n, max_size=n))
    loop = data.draw(st.integers(0, n - 1))
    edges = [(i, data.draw(st.sampled_from("ab")), i + 1 if i + 1 < n else loop) for i in range(n)]
    g = make_graph(n, edges, vals)
    assert check_ltl(g, f).holds != check_ltl(g, Not(f)).holds


def test_bracket_body_starts_at_the_executed_transition():
    # start -> login -> idle forever: the login happens right after start
    g = make_graph(3, [(0, "startSystem", 1), (1, "login", 2), (2, "idle", 2)], [(False, False)] * 3)
    fun2 = parse_ltl(FUN2)
    assert not check_ltl(g, fun2).holds
    # the alternative reading G(start => X(body)) skips the login and misses the flaw
    shifted = Globally(Implies(Executed("startSystem"), Next(fun2.arg)))
    assert check_ltl(g, shifted).holds


def test_fixed_seed_sample_agrees():
    rng = random.Random(20)
    for _ in range(100):
        g, f = random_graph(rng), random_formula(rng)
        v = check_ltl(g, f)
        assert v.holds == oracle_check(g, f).holds
        if not v.holds:
            assert_valid_counterexample(g, f, v)

import pytest
from hypothesis import given, strategies as st

from conftest import build
from vocheck.errors import EvaluationFault, ModelError
from vocheck.model.parser import parse_expr
from vocheck.model.semantics import (State, enabled_events, eval_expr, fire, flat_events, flatten_event,
                                     init_states, universes)


def test_m1_parses_to_one_context_one_machine(corpus):
    m1 = corpus.machine("m1")
    assert [e.name for e in m1.events] == ["login", "startSystem"]
    assert m1.sees == ("ctx",)
    assert set(corpus.contexts) == {"ctx", "ctx1"}


def test_empty_machine_requires_initialisation():
    p = build("machine M end", check=False)
    from vocheck.model.typecheck import typecheck
    msgs = [str(d) for d in typecheck(p)]
    assert p.machine("M").variables == ()
    assert any("INITIALISATION" in m for m in msgs)


def test_dangling_refines_is_an_error():
    with pytest.raises(ModelError, match="unknown machine 'mX'"):
        build("machine M refines mX variables x : BOOL init @a x := TRUE end end")


def test_syntax_error_carries_position():
    with pytest.raises(ModelError) as exc:
        build("machine M variables x : BOOL init @a x := TRUE end event e where @g x = end end")
    d = exc.value.diagnostics[0]
    assert (d.file, d.line) == ("src0.ebs", 1) and d.col > 1


def test_duplicate_names_are_rejected():
    with pytest.raises(ModelError):
        build("context C sets A = {a} end", "context D sets B = {a} end")


@pytest.mark.parametrize("src, needle", [
    ("machine M variables x : BOOL init @a x := 3 end end", "cannot assign"),
    ("machine M variables x : BOOL init @a x := TRUE end event e where @g a1 = b1 end end", "cannot compare"),
])
def test_typecheck_reports_one_diagnostic(src, needle):
    from vocheck.model.typecheck import typecheck
    ctx = "context C sets A = {a1}\n B = {b1} end"
    p = build(ctx, src.replace("machine M ", "machine M sees C "), check=False)
    msgs = [str(d) for d in typecheck(p)]
    assert len(msgs) == 1 and needle in msgs[0]


def test_corpus_typechecks(corpus):
    from vocheck.model.typecheck import typecheck
    assert typecheck(corpus) == []


def test_eval_examples(corpus):
    assert eval_expr(parse_expr("3 ∈ 1..5"), {}) is True
    assert eval_expr(parse_expr("x + 1"), {"x": 5}) == 6
    m = corpus.machine("m2Concrete")
    u = universes(m)[0]  # roleMap stays deferred; the view fixes the init map
    s = init_states(m, u)[0]
    env = {**u.env, **s.bindings}
    assert eval_expr(parse_expr("treatmentAllowed(loggedInID) = doctors"), env) is True
    assert eval_expr(parse_expr("treatmentAllowed(nurseId) = doctors"), env) is False


def test_partial_application_faults():
    f = parse_expr("f(b)")
    from vocheck.model.types import make_map
    env = {"f": make_map([(1, 2)]), "b": 3}
    with pytest.raises(EvaluationFault):
        eval_expr(f, env)
    # a left-hand domain check protects the right-hand side
    assert eval_expr(parse_expr("b ∈ dom(f) and f(b) = 2"), env) is False


def test_flatten_prepends_parent_guards(corpus):
    m2 = corpus.machine("m2")
    ev = flatten_event(m2, m2.event("startSystem"))
    assert [g.label for g in ev.guards] == ["@grd1", "@grd2", "@grd3"]
    assert flatten_event(m2, ev) == ev
    m1 = corpus.machine("m1")
    assert flatten_event(m1, m1.event("login")) == m1.event("login")


def test_three_level_extends_chain():
    p = build(
        "machine A variables x : 0..3 init @a x := 0 end event e where @g1 x < 3 then @a1 x := x + 1 end end",
        "machine B refines A variables x : 0..3 init @a x := 0 end event e extends e where @g2 x < 2 end end",
        "machine C refines B variables x : 0..3 init @a x := 0 end event e extends e where @g3 x < 1 end end",
    )
    c = p.machine("C")
    (ev,) = flat_events(c)
    assert [g.label for g in ev.guards] == ["@g1", "@g2", "@g3"]
    assert [a.label for a in ev.actions] == ["@a1"]


def test_extends_cycle_is_rejected():
    with pytest.raises(ModelError):
        build("machine A refines B variables x : BOOL init @a x := TRUE end end",
              "machine B refines A variables x : BOOL init @a x := TRUE end end")


def test_m1_init_and_enabledness(corpus):
    m1 = corpus.machine("m1")
    (u,) = universes(m1)
    (s,) = init_states(m1, u)
    assert s["loggedIn"].name == "no"
    assert [e.name for e, _ in enabled_events(m1, s, u)] == ["login"]


def test_deferred_constant_universes():
    ctx = "context C sets A = {a, b} constants c : A end"
    m = "machine M sees C variables x : BOOL init @i x := TRUE end end"
    assert len(universes(build(ctx, m).machine("M"))) == 2
    ctx_ax = "context C sets A = {a, b} constants c : A axioms @ax c = a end"
    (u,) = universes(build(ctx_ax, m).machine("M"))
    assert u.id == "c=a"


def test_login_has_three_bindings_and_fires(corpus):
    m2 = corpus.machine("m2")
    u = universes(m2)[0]
    s = init_states(m2, u)[0]
    logins = [(e, b) for e, b in enabled_events(m2, s, u) if e.name == "login"]
    assert len(logins) == 3
    ev, b = next((e, b) for e, b in logins if dict(b)["id"].name == "doctorId")
    t = fire(m2, s, ev, b, u)
    assert t["loggedIn"].name == "yes" and t["loggedInID"].name == "doctorId"


def test_deadlock_state_has_no_enabled_events():
    p = build("machine M variables x : BOOL init @a x := FALSE end event e where @g x = TRUE end end")
    m = p.machine("M")
    u = universes(m)[0]
    assert enabled_events(m, init_states(m, u)[0], u) == []


def test_event_without_actions_keeps_state():
    p = build("machine M variables x : BOOL init @a x := FALSE end event skip end end")
    m = p.machine("M")
    u = universes(m)[0]
    s = init_states(m, u)[0]
    assert fire(m, s, flat_events(m)[0], (), u) is s


def test_simultaneous_assignment_swaps():
    p = build("machine M variables x : 1..2\n y : 1..2 init @a x := 1\n @b y := 2 end "
              "event swap then @a x := y\n @b y := x end end")
    m = p.machine("M")
    u = universes(m)[0]
    s = init_states(m, u)[0]
    t = fire(m, s, flat_events(m)[0], (), u)
    assert (t["x"], t["y"]) == (2, 1)
    # sequential reading would give (2, 2)
    assert (t["x"], t["y"]) != (2, 2)


def test_fire_is_deterministic(corpus):
    m2 = corpus.machine("m2")
    u = universes(m2)[0]
    s = init_states(m2, u)[0]
    ev, b = enabled_events(m2, s, u)[0]
    assert fire(m2, s, ev, b, u) == fire(m2, s, ev, b, u)


def test_guard_fault_counts_as_false_like_explicit_domain_check():
    ctx = "context C sets A = {a, b} constants f : A +-> BOOL axioms @ax dom(f) = {a} end"
    faulting = ("machine M sees C variables x : BOOL init @i x := FALSE end "
                "event e any p : A where @g f(p) = TRUE end end")
    checked = faulting.replace("@g f(p) = TRUE", "@g p ∈ dom(f) and f(p) = TRUE")
    for u_src in (faulting, checked):
        m = build(ctx, u_src).machine("M")
        for u in universes(m):
            s = init_states(m, u)[0]
            bindings = [dict(b)["p"].name for _, b in enabled_events(m, s, u)]
            assert "b" not in bindings


values = st.one_of(st.booleans(), st.integers(-3, 3))


@given(st.dictionaries(st.sampled_from("xyz"), values, min_size=1),
       st.dictionaries(st.sampled_from("xyz"), values, min_size=1))
def test_canonical_key_is_injective(a, b):
    sa, sb = State.of(a), State.of(b)
    assert (sa.canonical_key == sb.canonical_key) == (sa.bindings == sb.bindings and
                                                      all(type(a[k]) is type(b[k]) for k in a))

import pytest
from hypothesis import given, strategies as st

from conftest import build, write_project
from vocheck.errors import VoSyntaxError
from vocheck.explorer import Lasso, Trace
from vocheck.loader import corpus_dir, load_project
from vocheck.model.semantics import fire, flat_events, init_states, universes
from vocheck.vo import (VO, VOResult, GraphCache, conflict_analysis, parse_vo_file, parse_vo_line,
                        run_all, run_vo)


def test_canonical_lines():
    vo = parse_vo_line("VO SEC1 : m1 / LTL / G({loggedIn = yes} => e(startSystem))")
    assert (vo.requirement, vo.machine, vo.technique) == ("SEC1", "m1", "LTL")
    assert vo.parameters == "G({loggedIn = yes} => e(startSystem))"
    vo = parse_vo_line("VO SAF1 : m1 / PO / treatmentParameters ∈ 1..5")
    assert (vo.requirement, vo.machine, vo.technique, vo.parameters) == (
        "SAF1", "m1", "PO", "treatmentParameters ∈ 1..5")


def test_unknown_technique():
    with pytest.raises(VoSyntaxError, match="unknown technique"):
        parse_vo_line("VO X : m1 / FOO / p")


@pytest.mark.parametrize("line", ["SAF1/m1/PO: treatmentParameters ∈ 1..5",
                                  "FUN1/m2/PO/persons = {doctors, nurses, maintenance}"])
def test_lenient_spellings_are_normalized(line):
    vo = parse_vo_line(line)
    assert vo.technique == "PO" and "normalized from non-canonical spelling" in vo.notes
    with pytest.raises(VoSyntaxError):
        parse_vo_line(line, lenient=False)


def test_file_with_comments_notes_blocks_and_duplicates():
    text = ('# a comment\n\n# note: watch this\nVO A : m1 / LTL / """G(\n  true)"""\n'
            "VO B : m1 / TRACE /\n")
    a, b = parse_vo_file(text, "x.vo")
    assert a.parameters == "G(\n  true)" and a.notes == ("watch this",) and a.origin == "x.vo:4"
    assert b.technique == "TRACE" and b.parameters == "" and b.notes == ()
    with pytest.raises(VoSyntaxError, match="duplicate"):
        parse_vo_file("VO A : m1 / PO / 1 = 1\nVO A : m1 / PO / 2 = 2\n")


def by_key(results):
    return {(r.requirement, r.machine): r for r in results}


def test_corpus_before_refactor(corpus):
    results = run_all(corpus)
    assert [(r.requirement, r.machine, r.inherited, r.status) for r in results] == [
        ("SAF1", "m1", False, "PASS"), ("SEC1", "m1", False, "PASS"),
        ("FUN1", "m2", False, "PASS"), ("SEC2", "m2", False, "PASS"),
        ("SAF1", "m2", True, "PASS"), ("SEC1", "m2", True, "FAIL"),
    ]
    sec1 = by_key(results)[("SEC1", "m2")]
    assert isinstance(sec1.evidence, Lasso)
    assert len(sec1.universes) == 6 and all(u.status == "FAIL" for u in sec1.universes)


def test_corpus_after_refactor():
    project = load_project(corpus_dir("hemodialysis-refactored"))
    results = run_all(project)
    assert results and all(r.status == "PASS" for r in results)
    assert not conflict_analysis(results, project)


def test_sec1_conflict_names_sec2(corpus):
    report = conflict_analysis(run_all(corpus), corpus)
    (entry,) = report.entries
    assert (entry.requirement, entry.passed_on, entry.failed_on) == ("SEC1", "m1", "m2")
    assert entry.candidates == ("SEC2",) and entry.category == "contradiction"
    assert entry.evidence is not None


def test_inherited_fail_replays_on_refining_machine(corpus):
    sec1 = by_key(run_all(corpus))[("SEC1", "m2")]
    m2 = corpus.machine("m2")
    unis = {u.id: u for u in universes(m2)}
    for part in sec1.universes:
        u = unis[part.id]
        lasso = part.evidence
        state = init_states(m2, u)[0]
        assert state == lasso.prefix.start
        for step in lasso.prefix.steps + lasso.cycle.steps:
            ev = next(e for e in flat_events(m2) if e.name == step.event)
            state = fire(m2, state, ev, step.binding, u)
            assert state == step.state
        assert lasso.cycle.end == lasso.cycle.start == lasso.prefix.end


def test_empty_vo_set(corpus):
    assert run_all(corpus, only=["NOPE"]) == []


def test_only_selects_requirements(corpus):
    results = run_all(corpus, only=["SEC1"])
    assert {r.requirement for r in results} == {"SEC1"} and len(results) == 2


def test_trace_technique(corpus):
    empty = run_vo(corpus, VO("T", "m2Concrete", "TRACE", ""))
    assert empty.status == "PASS" and isinstance(empty.evidence, Trace) and len(empty.evidence) == 0
    ok = run_vo(corpus, VO("T", "m2Concrete", "TRACE", "login(nurseId), startSystem"))
    assert ok.status == "PASS" and ok.evidence.labels() == ["login(id=nurseId)", "startSystem"]
    bad = run_vo(corpus, VO("T", "m2Concrete", "TRACE", "startSystem"))
    assert bad.status == "FAIL" and bad.evidence.step == 1
    unknown = run_vo(corpus, VO("T", "m2Concrete", "TRACE", "logout"))
    assert unknown.status == "ERROR" and "logout" in unknown.diagnostic


def test_po_modes(corpus):
    assert run_vo(corpus, VO("S", "m1", "PO", "treatmentParameters ∈ 1..5 ; mode=inductive")).status == "PASS"
    r = run_vo(corpus, VO("S", "m1", "PO", "treatmentParameters ∈ 1..5"), inductive_default=True)
    assert r.status == "PASS"
    assert run_vo(corpus, VO("S", "m1", "PO", "treatmentParameters = 4")).status == "FAIL"


@pytest.mark.parametrize("vo, needle", [
    (VO("E", "m1", "LTL", "G({loggedInID = doctorId})"), "loggedInID"),  # symbol absent on m1
    (VO("E", "m1", "LTL", "G({loggedIn = yes}"), "expected"),
    (VO("E", "m1", "PO", "loggedIn + 1 = 2"), "typecheck"),
    (VO("E", "nowhere", "PO", "1 = 1"), "unknown machine"),
])
def test_tool_problems_are_errors_not_failures(corpus, vo, needle):
    r = run_vo(corpus, vo)
    assert r.status == "ERROR" and needle in r.diagnostic


def test_truncation_is_refused(corpus):
    r = run_vo(corpus, VO("S", "m1", "PO", "1 = 1"), GraphCache(max_states=1))
    assert r.status == "REFUSED"


def test_error_isolation(corpus_copy):
    before = run_all(load_project(corpus_copy))
    vo_file = corpus_copy / "vos" / "requirements.vo"
    vo_file.write_text(vo_file.read_text(encoding="utf-8") + "VO BROKEN : m1 / LTL / G(((\n",
                       encoding="utf-8")
    after = run_all(load_project(corpus_copy))
    broken = [r for r in after if r.requirement == "BROKEN"]
    assert broken and all(r.status == "ERROR" for r in broken)
    strip = lambda rs: [(r.requirement, r.machine, r.status, r.universes) for r in rs if r.requirement != "BROKEN"]
    assert strip(after) == strip(before)


def test_cache_transparency_and_determinism(corpus):
    cached = run_all(corpus, cache=GraphCache())
    uncached = run_all(corpus, cache=GraphCache(enabled=False))
    again = run_all(corpus)
    assert cached == uncached == again


def test_single_machine_has_no_conflicts():
    p = build("machine M variables x : BOOL init @a x := TRUE end end")
    results = [run_vo(p, VO("A", "M", "PO", "x = TRUE")), run_vo(p, VO("B", "M", "PO", "x = FALSE"))]
    assert [r.status for r in results] == ["PASS", "FAIL"]
    assert not conflict_analysis(results, p)


CHAIN = [
    "machine A variables x : 0..2 init @a x := 0 end event inc where @g x < 2 then @a x := x + 1 end end",
    "machine B refines A variables x : 0..2 init @a x := 0 end event inc extends inc end end",
    "machine C refines B variables x : 0..2 init @a x := 0 end event inc extends inc end end",
]


@given(st.dictionaries(st.tuples(st.sampled_from(["R1", "R2"]), st.sampled_from("ABC")),
                       st.sampled_from(["PASS", "FAIL", "ERROR"])))
def test_conflict_completeness(statuses):
    project = build(*CHAIN)
    results = [VOResult(VO(req, m, "PO", "x = 0"), m, status) for (req, m), status in statuses.items()]
    order = "ABC"
    expected = {(req, a, b) for (req, a), sa in statuses.items() for (req2, b), sb in statuses.items()
                if req == req2 and sa == "PASS" and sb == "FAIL" and order.index(a) < order.index(b)}
    got = {(e.requirement, e.passed_on, e.failed_on) for e in conflict_analysis(results, project).entries}
    assert got == expected


def test_inherited_order_follows_depth(tmp_path):
    root = write_project(tmp_path, {
        "models/a.ebs": CHAIN[0], "models/b.ebs": CHAIN[1], "models/c.ebs": CHAIN[2],
        "vos/v.vo": "VO R1 : A / PO / x ∈ 0..2\nVO R2 : A / PO / x = 0\nVO R3 : B / LTL / G(e(inc))\n",
    })
    results = run_all(load_project(root))
    assert [(r.requirement, r.machine, r.inherited) for r in results] == [
        ("R1", "A", False), ("R2", "A", False), ("R3", "B", False),
        ("R1", "B", True), ("R2", "B", True),
        ("R1", "C", True), ("R2", "C", True), ("R3", "C", True),
    ]
    assert [r.status for r in results] == ["PASS", "FAIL", "FAIL", "PASS", "FAIL", "PASS", "FAIL", "FAIL"]

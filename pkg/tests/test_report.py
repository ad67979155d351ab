import json

import jsonschema
import pytest

from vocheck.loader import corpus_dir, corpus_names, load_project
from vocheck.report import emit_report, load_schema
from vocheck.views import run_template_vos
from vocheck.vo import VO, ConflictReport, conflict_analysis, run_all, run_vo


def report_for(name, fmt="json"):
    project = load_project(corpus_dir(name))
    results = run_all(project)
    return emit_report(results, conflict_analysis(results, project), fmt, project=name)


@pytest.mark.parametrize("name", corpus_names())
def test_reports_match_schema(name):
    jsonschema.validate(json.loads(report_for(name)), load_schema())


def test_every_evidence_kind_matches_schema(corpus):
    vos = [VO("A", "m1", "PO", "treatmentParameters = 4"),
           VO("B", "m2Concrete", "TRACE", "login(nurseId), startSystem"),
           VO("C", "m2Concrete", "TRACE", "startSystem"),
           VO("D", "m1", "LTL", "G({loggedIn = no})"),
           VO("E", "m1", "LTL", "G(("),
           VO("F", "m1", "PO", "loggedIn = no ; mode=inductive")]
    results = [run_vo(corpus, vo) for vo in vos]
    data = json.loads(emit_report(results, ConflictReport()))
    jsonschema.validate(data, load_schema())
    assert [r["evidence"]["kind"] for r in data["results"]] == [
        "trace", "trace", "refusal", "lasso", "diagnostic", "witness"]


def test_template_report_matches_schema():
    project = load_project(corpus_dir("hemodialysis"), apply_views=False)
    spec = project.views[0]
    run = run_template_vos(project, spec, [spec])
    data = json.loads(emit_report(run.results, ConflictReport(), templates=run.aggregates))
    jsonschema.validate(data, load_schema())
    assert data["templates"] == [{"requirement": "FUN2", "status": "FAIL",
                                  "scenarios": ["m2Concrete"], "vacuous": False}]
    assert data["results"][0]["view"] == "m2Concrete"


def test_markdown_table_has_the_failing_cell():
    md = report_for("hemodialysis", "markdown")
    assert "| Requirement | m1 | m2 |" in md
    assert "| SEC1 | PASS | FAIL (inherited) |" in md
    assert sum(line.count("FAIL") for line in md.splitlines() if line.startswith("| ")) == 1
    assert "Candidate contradictors" in md and "SEC2" in md
    assert "login(id=maintenanceId)" in md


def test_empty_reports():
    data = json.loads(emit_report([], ConflictReport(), project="x"))
    assert data == {"project": "x", "summary": {"PASS": 0, "FAIL": 0, "ERROR": 0, "REFUSED": 0},
                    "results": [], "conflicts": []}
    jsonschema.validate(data, load_schema())
    md = emit_report([], ConflictReport(), "markdown")
    assert "No VOs were run." in md and "None." in md


def test_unknown_format():
    with pytest.raises(ValueError):
        emit_report([], ConflictReport(), "xml")


@pytest.mark.parametrize("fmt", ["json", "markdown"])
def test_byte_identical(fmt):
    assert report_for("hemodialysis", fmt) == report_for("hemodialysis", fmt)


def test_wall_time_is_null_without_timing(corpus):
    data = json.loads(emit_report(run_all(corpus), ConflictReport()))
    assert all(r["wall_time_ms"] is None for r in data["results"])
    timed = json.loads(emit_report(run_all(corpus, timing=True), ConflictReport()))
    assert all(isinstance(r["wall_time_ms"], (int, float)) for r in timed["results"])

"""JSON and Markdown reports over VO results and conflicts."""

from __future__ import annotations

import json
from importlib import resources
from typing import Any, Iterable

from .explorer import Lasso, Trace, TraceRefusal
from .po import InductiveWitness
from .vo import ConflictReport, VOResult, evidence_kind

STATUSES = ("PASS", "FAIL", "ERROR", "REFUSED")


def load_schema() -> dict:
    return json.loads((resources.files("vocheck") / "report_schema.json").read_text(encoding="utf-8"))


def evidence_json(result: VOResult) -> dict | None:
    if result.status == "ERROR" or result.status == "REFUSED":
        return {"kind": "diagnostic", "diagnostic": result.diagnostic or ""}
    ev = result.evidence
    kind = evidence_kind(ev)
    if kind is None:
        return None
    out: dict[str, Any] = {"kind": kind}
    uid = result.evidence_universe or (result.universes[0].id if result.universes else None)
    if uid is not None:
        out["universe"] = uid
    if isinstance(ev, Lasso):
        out["lasso"] = ev.to_json()
        out["labels"] = {"prefix": ev.prefix.labels(), "cycle": ev.cycle.labels()}
    elif isinstance(ev, Trace):
        out["trace"] = ev.to_json()
        out["labels"] = ev.labels()
    elif isinstance(ev, InductiveWitness):
        out["witness"] = ev.to_json()
    elif isinstance(ev, TraceRefusal):
        out["refusal"] = ev.to_json()
    return out


def result_json(r: VOResult) -> dict:
    d: dict[str, Any] = {
        "requirement": r.requirement,
        "machine": r.machine,
        "technique": r.vo.technique,
        "parameters": r.vo.parameters,
        "inherited": r.inherited,
        "status": r.status,
        "universes": [{"id": u.id, "status": u.status} for u in r.universes],
        "evidence": evidence_json(r),
        "wall_time_ms": r.wall_time_ms,
        "origin": r.vo.origin,
    }
    if r.view is not None:
        d["view"] = r.view
    if r.vo.notes:
        d["notes"] = list(r.vo.notes)
    return d


def report_data(results: Iterable[VOResult], conflicts: ConflictReport, *, project: str,
                templates: Iterable = ()) -> dict:
    results = list(results)
    summary = {s: sum(1 for r in results if r.status == s) for s in STATUSES}
    data: dict[str, Any] = {
        "project": project,
        "summary": summary,
        "results": [result_json(r) for r in results],
        "conflicts": [
            {"requirement": c.requirement, "passed_on": c.passed_on, "failed_on": c.failed_on,
             "candidates": list(c.candidates), "category": c.category,
             "heuristic": "shared variables or events in the VO parameters"}
            for c in conflicts.entries
        ],
    }
    templates = list(templates)
    if templates:
        data["templates"] = [
            {"requirement": a.requirement, "status": a.status, "scenarios": list(a.scenarios),
             "vacuous": a.vacuous}
            for a in templates
        ]
    return data


def emit_report(results: Iterable[VOResult], conflicts: ConflictReport, fmt: str = "json", *,
                project: str = "project", templates: Iterable = ()) -> str:
    """Render a deterministic report (same input, same bytes)."""
    data = report_data(results, conflicts, project=project, templates=templates)
    if fmt == "json":
        return json.dumps(data, indent=2, ensure_ascii=False) + "\n"
    if fmt == "markdown":
        return _markdown(data)
    raise ValueError(f"unknown report format {fmt!r}")


def _cell(results: list[dict]) -> str:
    if not results:
        return ""
    r = results[0]
    return r["status"] + (" (inherited)" if r["inherited"] else "")


def _arrow(labels: list[str]) -> str:
    return " -> ".join(labels) if labels else "(no steps)"


def _evidence_line(ev: dict) -> str:
    kind = ev["kind"]
    where = f" in universe `{ev['universe']}`" if "universe" in ev else ""
    if kind == "lasso":
        return (f"counterexample{where}: prefix {_arrow(ev['labels']['prefix'])}; "
                f"cycle {_arrow(ev['labels']['cycle'])}")
    if kind == "trace":
        return f"trace{where}: {_arrow(ev['labels'])}"
    if kind == "witness":
        w = ev["witness"]
        pre = "initialisation" if w["pre"] is None else json.dumps(w["pre"], sort_keys=True)
        return f"inductive witness{where}: from {pre} via {w['event']} to {json.dumps(w['post'], sort_keys=True)}"
    if kind == "refusal":
        r = ev["refusal"]
        alts = ", ".join(r["alternatives"]) or "none"
        return f"infeasible at step {r['step']} ({r['event']}){where}; enabled instead: {alts}"
    return f"diagnostic: {ev['diagnostic']}"


def _markdown(data: dict) -> str:
    lines = [f"# VO report: {data['project']}", ""]
    s = data["summary"]
    lines.append(", ".join(f"{k}: {s[k]}" for k in STATUSES))
    lines.append("")
    results = data["results"]
    machines: list[str] = []
    reqs: list[str] = []
    for r in results:
        if r["machine"] not in machines:
            machines.append(r["machine"])
        if r["requirement"] not in reqs:
            reqs.append(r["requirement"])
    lines.append("## Requirement x machine")
    lines.append("")
    if not results:
        lines.append("No VOs were run.")
    else:
        lines.append("| Requirement | " + " | ".join(machines) + " |")
        lines.append("|---|" + "---|" * len(machines))
        for req in reqs:
            cells = [_cell([r for r in results if r["requirement"] == req and r["machine"] == m])
                     for m in machines]
            lines.append(f"| {req} | " + " | ".join(cells) + " |")
    lines.append("")
    if results:
        lines.append("## Details")
        lines.append("")
    for r in results:
        tag = " (inherited)" if r["inherited"] else ""
        lines.append(f"### {r['requirement']} on {r['machine']}{tag}: {r['status']}")
        lines.append("")
        lines.append(f"- {r['technique']}: `{r['parameters']}`")
        lines.append(f"- declared at {r['origin']}")
        if len(r["universes"]) > 1:
            counts = {st: sum(1 for u in r["universes"] if u["status"] == st) for st in STATUSES}
            lines.append(f"- {len(r['universes'])} constant universes: "
                         + ", ".join(f"{n} {st}" for st, n in counts.items() if n))
        if r["evidence"] is not None:
            lines.append(f"- {_evidence_line(r['evidence'])}")
        for note in r.get("notes", []):
            lines.append(f"- note: {note}")
        if r["wall_time_ms"] is not None:
            lines.append(f"- time: {r['wall_time_ms']} ms")
        lines.append("")
    lines.append("## Conflicts")
    lines.append("")
    if not data["conflicts"]:
        lines.append("None.")
    for c in data["conflicts"]:
        cands = ", ".join(c["candidates"]) or "none found"
        lines.append(f"- {c['requirement']} passes on {c['passed_on']} but fails on {c['failed_on']}. "
                     f"Candidate contradictors ({c['heuristic']}): {cands}. "
                     f"Suggested category: {c['category']}.")
    lines.append("")
    if "templates" in data:
        lines.append("## Template VOs")
        lines.append("")
        for t in data["templates"]:
            flag = " (vacuous: no scenarios)" if t["vacuous"] else ""
            lines.append(f"- {t['requirement']}: {t['status']}{flag} over "
                         f"{', '.join(t['scenarios']) or 'no scenarios'}")
        lines.append("")
    return "\n".join(lines)

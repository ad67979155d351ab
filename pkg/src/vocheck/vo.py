"""Validation obligations: parsing, dispatch to checking techniques,
re-checking along refinement chains and conflict spotting."""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

from .errors import ModelError, Refusal, VocheckError, VoSyntaxError
from .explorer import (DEFAULT_MAX_STATES, Lasso, StateGraph, Trace, TraceRefusal, check_trace,
                       explore, parse_steps, resolve_steps)
from .ltl import check_ltl, parse_ltl, validate_formula
from .model.ast import Machine, Project
from .model.parser import parse_expr
from .model.semantics import Universe, flat_events, universes
from .model.typecheck import check_predicate, machine_scope
from .po import INDUCTIVE, REACHABLE, InductiveWitness, check_inductive, check_reachable, parse_po_parameters

log = logging.getLogger(__name__)

TECHNIQUES = ("PO", "LTL", "TRACE")
PASS, FAIL, ERROR, REFUSED = "PASS", "FAIL", "ERROR", "REFUSED"
_SEVERITY = {PASS: 0, FAIL: 1, REFUSED: 2, ERROR: 3}


@dataclass(frozen=True)
class VO:
    requirement: str
    machine: str
    technique: str
    parameters: str
    file: str | None = None
    line: int | None = None
    notes: tuple[str, ...] = ()

    @property
    def origin(self) -> str:
        if self.file is None:
            return "<memory>"
        return f"{self.file}:{self.line}" if self.line else self.file


@dataclass(frozen=True)
class UniverseResult:
    id: str
    status: str
    evidence: Any = None
    diagnostic: str | None = None


@dataclass(frozen=True)
class VOResult:
    vo: VO
    machine: str
    status: str
    inherited: bool = False
    universes: tuple[UniverseResult, ...] = ()
    diagnostic: str | None = None
    wall_time_ms: float | None = None
    view: str | None = None

    @property
    def requirement(self) -> str:
        return self.vo.requirement

    @property
    def evidence(self) -> Any:
        """Evidence of the first universe that did not pass (or of the
        first universe for a passing trace)."""
        for u in self.universes:
            if u.status != PASS:
                return u.evidence
        if self.universes and self.vo.technique == "TRACE":
            return self.universes[0].evidence
        return None

    @property
    def evidence_universe(self) -> str | None:
        for u in self.universes:
            if u.status != PASS:
                return u.id
        return None


# -- parsing -----------------------------------------------------------------

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_CANONICAL = re.compile(rf"^VO\s+({_IDENT})\s*:\s*({_IDENT})\s*/\s*({_IDENT})\s*/\s*(.*)$", re.S)
_LENIENT = re.compile(rf"^(?:VO\s+)?({_IDENT})\s*/\s*({_IDENT})\s*/\s*({_IDENT})\s*[:/]\s*(.*)$", re.S)
_NOTE = re.compile(r"^#\s*note:\s*(.*)$", re.I)


def _logical_lines(text: str):
    """Yield ``(line number, text)``; a ``\"\"\"`` opened in a line runs to
    its closing ``\"\"\"``, possibly over several lines."""
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        start = i
        line = lines[i]
        if line.count('"""') % 2 == 1:
            parts = [line]
            i += 1
            while i < len(lines) and lines[i].count('"""') % 2 == 0:
                parts.append(lines[i])
                i += 1
            if i == len(lines):
                raise VoSyntaxError("unterminated \"\"\" block", None, start + 1)
            parts.append(lines[i])
            line = "\n".join(parts)
        i += 1
        yield start + 1, line


def _strip_block(params: str) -> str:
    params = params.strip()
    if params.startswith('"""') and params.endswith('"""') and len(params) >= 6:
        return params[3:-3].strip()
    return params


def parse_vo_line(line: str, *, file: str | None = None, lineno: int | None = None,
                  lenient: bool = True, notes: tuple[str, ...] = ()) -> VO:
    text = line.strip()
    m = _CANONICAL.match(text)
    if m is None and lenient:
        m = _LENIENT.match(text)
        if m is not None:
            log.info("%s:%s: normalized VO spelling %r", file, lineno, text.split("/")[0])
            notes = notes + ("normalized from non-canonical spelling",)
    if m is None:
        raise VoSyntaxError("expected 'VO <requirement> : <machine> / <TECHNIQUE> / <parameters>'",
                            file, lineno)
    req, machine, technique, params = m.groups()
    tech = technique.upper()
    if tech not in TECHNIQUES:
        raise VoSyntaxError(f"unknown technique {technique!r} (expected PO, LTL or TRACE)", file, lineno)
    params = _strip_block(params)
    if tech != "TRACE" and not params:
        raise VoSyntaxError(f"{tech} VO {req} has no parameters", file, lineno)
    return VO(req, machine, tech, params, file, lineno, notes)


def parse_vo_file(text: str, file: str | None = None, *, lenient: bool = True) -> list[VO]:
    """Parse a ``.vo`` file: one VO per line, ``#`` comments, blank lines
    ignored. A ``# note: ...`` comment attaches to the next VO."""
    out: list[VO] = []
    seen: dict[tuple[str, str], int] = {}
    pending: list[str] = []
    for lineno, line in _logical_lines(text):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = _NOTE.match(stripped)
            if m:
                pending.append(m.group(1).strip())
            continue
        vo = parse_vo_line(stripped, file=file, lineno=lineno, lenient=lenient, notes=tuple(pending))
        pending = []
        key = (vo.requirement, vo.machine)
        if key in seen:
            raise VoSyntaxError(f"duplicate VO {vo.requirement} on {vo.machine} "
                                f"(first declared on line {seen[key]})", file, lineno)
        seen[key] = lineno
        out.append(vo)
    return out


def check_unique(vos: Iterable[VO]) -> None:
    seen: dict[tuple[str, str], VO] = {}
    for vo in vos:
        key = (vo.requirement, vo.machine)
        if key in seen:
            raise VoSyntaxError(f"duplicate VO {vo.requirement} on {vo.machine} "
                                f"(also declared at {seen[key].origin})", vo.file, vo.line)
        seen[key] = vo


# -- execution ---------------------------------------------------------------

class GraphCache:
    """Explored graphs and constant universes keyed by machine name."""

    def __init__(self, max_states: int = DEFAULT_MAX_STATES, enabled: bool = True):
        self.max_states = max_states
        self.enabled = enabled
        self._universes: dict[str, list[Universe]] = {}
        self._graphs: dict[tuple[str, str], StateGraph] = {}

    def universes(self, machine: Machine) -> list[Universe]:
        if not self.enabled:
            return universes(machine)
        hit = self._universes.get(machine.name)
        if hit is None:
            hit = self._universes[machine.name] = universes(machine)
        return hit

    def graph(self, machine: Machine, universe: Universe) -> StateGraph:
        if not self.enabled:
            return explore(machine, universe, max_states=self.max_states)
        key = (machine.name, universe.id)
        hit = self._graphs.get(key)
        if hit is None:
            hit = self._graphs[key] = explore(machine, universe, max_states=self.max_states)
        return hit

    def forget(self, machine_name: str) -> None:
        self._universes.pop(machine_name, None)
        for key in [k for k in self._graphs if k[0] == machine_name]:
            del self._graphs[key]


def _aggregate(parts: Iterable[UniverseResult]) -> str:
    status = PASS
    for p in parts:
        if _SEVERITY[p.status] > _SEVERITY[status]:
            status = p.status
    return status


def _error(vo: VO, machine: str, msg: str, inherited: bool, **kw) -> VOResult:
    return VOResult(vo, machine, ERROR, inherited, (), msg, **kw)


def run_vo(project: Project, vo: VO, cache: GraphCache | None = None, *, machine: str | None = None,
           inherited: bool = False, inductive_default: bool = False,
           timing: bool = False) -> VOResult:
    """Execute one VO (optionally against another machine than the one it
    names). Tool-side failures become ERROR or REFUSED, never FAIL."""
    cache = cache or GraphCache()
    target = machine or vo.machine
    started = time.perf_counter()
    try:
        result = _dispatch(project, vo, target, cache, inherited, inductive_default)
    except Refusal as exc:
        result = VOResult(vo, target, REFUSED, inherited, (), str(exc))
    except (VocheckError, ValueError) as exc:
        result = _error(vo, target, str(exc), inherited)
    if timing:
        result = replace(result, wall_time_ms=round((time.perf_counter() - started) * 1000, 3))
    return result


def _dispatch(project: Project, vo: VO, target: str, cache: GraphCache, inherited: bool,
              inductive_default: bool) -> VOResult:
    if not project.has_machine(target):
        return _error(vo, target, f"unknown machine {target!r}", inherited)
    m = project.machine(target)
    try:
        unis = cache.universes(m)
    except ModelError as exc:
        return _error(vo, target, str(exc), inherited)
    if not unis:
        return _error(vo, target, "no constant valuation satisfies the axioms", inherited)
    parts: list[UniverseResult] = []
    if vo.technique == "PO":
        text, mode = parse_po_parameters(vo.parameters)
        mode = mode or (INDUCTIVE if inductive_default else REACHABLE)
        expr = parse_expr(text, vo.file, vo.line or 1)
        msg = check_predicate(expr, machine_scope(m))
        if msg:
            return _error(vo, target, f"predicate does not typecheck on {target}: {msg}", inherited)
        for u in unis:
            if mode == REACHABLE:
                v = check_reachable(cache.graph(m, u), expr)
            else:
                v = check_inductive(m, u, expr)
            parts.append(UniverseResult(u.id, PASS if v.holds else FAIL, v.witness))
    elif vo.technique == "LTL":
        formula = parse_ltl(vo.parameters)
        problems = validate_formula(formula, m)
        if problems:
            return _error(vo, target, f"formula is not meaningful on {target}: " + "; ".join(problems),
                          inherited)
        for u in unis:
            v = check_ltl(cache.graph(m, u), formula)
            parts.append(UniverseResult(u.id, PASS if v.holds else FAIL, v.counterexample))
    else:
        steps = parse_steps(vo.parameters)
        known = {e.name for e in flat_events(m)}
        unknown = sorted({name for name, _ in steps} - known)
        if unknown:
            return _error(vo, target, f"unknown event(s) on {target}: {', '.join(unknown)}", inherited)
        for u in unis:
            r = check_trace(m, u, resolve_steps(steps, u))
            parts.append(UniverseResult(u.id, PASS if isinstance(r, Trace) else FAIL, r))
    return VOResult(vo, target, _aggregate(parts), inherited, tuple(parts))


def inherited_targets(project: Project, vos: list[VO]) -> list[tuple[VO, Machine]]:
    """(VO, refining machine) pairs to re-check: every VO against every
    declared machine refining its machine, unless that machine declares the
    same requirement itself. Ordered by refinement depth, then declaration."""
    declared = {(v.requirement, v.machine) for v in vos}
    pairs = []
    for idx, vo in enumerate(vos):
        if vo.machine not in project.machines:
            continue
        for m in project.refinements_of(vo.machine):
            if (vo.requirement, m.name) in declared:
                continue
            pairs.append((m.depth(), idx, m.name, vo, m))
    pairs.sort(key=lambda p: p[:3])
    return [(vo, m) for *_, vo, m in pairs]


def run_all(project: Project, *, only: Iterable[str] | None = None, cache: GraphCache | None = None,
            inductive_default: bool = False, timing: bool = False,
            inherit: bool = True) -> list[VOResult]:
    """Run every selected VO, then re-run each on the machines refining its
    own. One VO's error never prevents the others from running."""
    cache = cache or GraphCache()
    selected = set(only) if only is not None else None
    vos = [v for v in project.vos if selected is None or v.requirement in selected]
    results = [run_vo(project, vo, cache, inductive_default=inductive_default, timing=timing)
               for vo in vos]
    if inherit:
        for vo, m in inherited_targets(project, vos):
            results.append(run_vo(project, vo, cache, machine=m.name, inherited=True,
                                  inductive_default=inductive_default, timing=timing))
    return results


# -- conflicts ---------------------------------------------------------------

@dataclass(frozen=True)
class ConflictEntry:
    requirement: str
    passed_on: str
    failed_on: str
    candidates: tuple[str, ...]
    category: str
    evidence: Any = field(default=None, compare=False)


@dataclass(frozen=True)
class ConflictReport:
    entries: tuple[ConflictEntry, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def parameter_symbols(vo: VO, machine: Machine) -> set[str]:
    """Identifiers in the VO parameters that name a variable or an event of
    ``machine``."""
    names = set(re.findall(_IDENT, vo.parameters))
    state = {v.name for v in machine.variables} | {e.name for e in flat_events(machine)}
    return names & state


def conflict_analysis(results: list[VOResult], project: Project) -> ConflictReport:
    """Flag each requirement that passes on a machine but fails on one refining
    it. Candidate contradictors are requirements passing on the refining
    machine whose parameters mention some of the same variables or events
    (a heuristic, not a proof of contradiction)."""
    entries: list[ConflictEntry] = []
    passed = [r for r in results if r.status == PASS and r.view is None]
    failed = [r for r in results if r.status == FAIL and r.view is None]
    for bad in failed:
        if not project.has_machine(bad.machine):
            continue
        m_bad = project.machine(bad.machine)
        ancestors = {a.name for a in m_bad.ancestors()}
        for good in passed:
            if good.requirement != bad.requirement or good.machine not in ancestors:
                continue
            symbols = parameter_symbols(bad.vo, m_bad)
            cands = sorted({r.requirement for r in passed
                            if r.machine == bad.machine and r.requirement != bad.requirement
                            and parameter_symbols(r.vo, m_bad) & symbols})
            category = "contradiction" if cands else "regression-under-refinement"
            entries.append(ConflictEntry(bad.requirement, good.machine, bad.machine, tuple(cands),
                                         category, bad.evidence))
    return ConflictReport(tuple(entries))


def evidence_kind(evidence: Any) -> str | None:
    if evidence is None:
        return None
    if isinstance(evidence, Lasso):
        return "lasso"
    if isinstance(evidence, Trace):
        return "trace"
    if isinstance(evidence, InductiveWitness):
        return "witness"
    if isinstance(evidence, TraceRefusal):
        return "refusal"
    return "diagnostic"

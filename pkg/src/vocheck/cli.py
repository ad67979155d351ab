"""Command-line interface.

Exit codes: 0 clean, 1 a requirement failed or a conflict was found,
2 tool or model error (including refusals and ambiguous input).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .errors import AmbiguousStepError, ModelError, VocheckError
from .explorer import DEFAULT_MAX_STATES, Trace, check_trace, explore, export_dot, export_json, parse_steps, resolve_steps
from .loader import corpus_dir, corpus_names, load_project
from .model.ast import Project
from .model.semantics import universes
from .report import emit_report
from .views import (apply_view, check_view_refines_base, parse_view_file,
                    run_template_vos, scenarios_for, view_source)
from .vo import ConflictReport, GraphCache, conflict_analysis, run_all

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
_COLORS = {"PASS": "32", "FAIL": "31", "ERROR": "35", "REFUSED": "33"}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors are tool errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--project", metavar="DIR", default=argparse.SUPPRESS,
                     help="project root (default: current directory)")
    src.add_argument("--corpus", metavar="NAME", default=argparse.SUPPRESS,
                     help=f"use a bundled example project ({', '.join(corpus_names())})")
    common.add_argument("--max-states", type=_positive, metavar="N", default=argparse.SUPPRESS,
                        help=f"exploration limit per universe (default {DEFAULT_MAX_STATES})")
    common.add_argument("--color", choices=("auto", "on", "off"), default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="vocheck", parents=[common],
                description="Run validation obligations over finite Event-B-style models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", parents=[common], help="run all VOs and report conflicts")
    c.add_argument("--only", action="append", metavar="REQID", help="restrict to a requirement (repeatable)")
    c.add_argument("--format", choices=("json", "markdown"), default="json")
    c.add_argument("--inductive-default", action="store_true",
                   help="check PO obligations inductively unless a VO says otherwise")
    c.add_argument("--timing", action="store_true", help="record wall time per VO (breaks byte-identity)")
    c.add_argument("--no-inherit", action="store_true", help="do not re-check VOs on refining machines")
    c.add_argument("--out", metavar="FILE", help="write the report to FILE instead of standard output")

    e = sub.add_parser("explore", parents=[common], help="explore a machine and export its state graph")
    e.add_argument("machine")
    e.add_argument("--dot", metavar="FILE")
    e.add_argument("--json", metavar="FILE")
    e.add_argument("--hide-bindings", action="store_true", help="omit parameter values from edge labels")

    t = sub.add_parser("trace", parents=[common], help="replay an event sequence")
    t.add_argument("machine")
    t.add_argument("steps", nargs="*", metavar="EV[(BINDING)]")
    t.add_argument("--universe", metavar="ID", help="only this constant universe")

    v = sub.add_parser("view", parents=[common], help="apply, check or run templates of a view file")
    v.add_argument("action", choices=("apply", "check", "run-templates"))
    v.add_argument("file")
    v.add_argument("--out", metavar="DIR", help="apply: directory for generated model files")
    v.add_argument("--format", choices=("json", "markdown"), default="json")
    return p


class _Ctx:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.max_states = getattr(args, "max_states", DEFAULT_MAX_STATES)
        color = getattr(args, "color", "auto")
        self.color = color == "on" or (color == "auto" and sys.stdout.isatty()
                                        and "NO_COLOR" not in os.environ)

    @property
    def root(self) -> Path:
        if getattr(self.args, "corpus", None):
            return corpus_dir(self.args.corpus)
        return Path(getattr(self.args, "project", "."))

    def load(self, *, apply_views: bool = True) -> Project:
        return load_project(self.root, apply_views=apply_views)

    def status(self, s: str) -> str:
        return f"\033[{_COLORS[s]}m{s}\033[0m" if self.color and s in _COLORS else s


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _exit_code(statuses: Sequence[str], conflicts: int = 0) -> int:
    if any(s in ("ERROR", "REFUSED") for s in statuses):
        return EXIT_ERROR
    if conflicts or any(s == "FAIL" for s in statuses):
        return EXIT_FAIL
    return EXIT_OK


def cmd_check(ctx: _Ctx) -> int:
    a = ctx.args
    project = ctx.load()
    cache = GraphCache(ctx.max_states)
    results = run_all(project, only=a.only, cache=cache, inductive_default=a.inductive_default,
                      timing=a.timing, inherit=not a.no_inherit)
    conflicts = conflict_analysis(results, project)
    name = Path(project.root).name if project.root else "project"
    _write(a.out, emit_report(results, conflicts, a.format, project=name))
    for r in results:
        if r.status in ("ERROR", "REFUSED"):
            print(f"{r.requirement} on {r.machine}: {r.status}: {r.diagnostic}", file=sys.stderr)
    return _exit_code([r.status for r in results], len(conflicts))


def _machine(project: Project, name: str):
    if not project.has_machine(name):
        known = ", ".join(list(project.machines) + list(project.derived))
        raise VocheckError(f"unknown machine {name!r} (known: {known})")
    return project.machine(name)


def cmd_explore(ctx: _Ctx) -> int:
    a = ctx.args
    project = ctx.load()
    m = _machine(project, a.machine)
    graphs = [explore(m, u, max_states=ctx.max_states) for u in universes(m)]
    if any(g.truncated for g in graphs):
        print(f"warning: exploration of {m.name} stopped at {ctx.max_states} states per universe; "
              "output is marked truncated", file=sys.stderr)
    if a.dot:
        _write(a.dot, export_dot(graphs, show_bindings=not a.hide_bindings))
    if a.json:
        _write(a.json, export_json(graphs))
    if not a.dot and not a.json:
        for g in graphs:
            flag = " (truncated)" if g.truncated else ""
            real = sum(1 for t in g.transitions if not t.synthetic)
            print(f"{g.universe_id}: {len(g.states)} states, {real} transitions, "
                  f"{len(g.deadlocks)} deadlocks{flag}")
    return EXIT_OK


def _render_trace(tr: Trace) -> list[str]:
    lines = [f"  0  {tr.start}"]
    for i, st in enumerate(tr.steps, 1):
        lines.append(f"  {i}  --{st.label}-->  {st.state}")
    return lines


def cmd_trace(ctx: _Ctx) -> int:
    a = ctx.args
    project = ctx.load()
    m = _machine(project, a.machine)
    steps = parse_steps(" ".join(a.steps))
    unis = universes(m)
    if a.universe is not None:
        unis = [u for u in unis if u.id == a.universe]
        if not unis:
            raise VocheckError(f"no universe {a.universe!r} for {m.name}")
    groups: dict[tuple, list[str]] = {}
    outcomes = {}
    for u in unis:
        r = check_trace(m, u, resolve_steps(steps, u))
        if isinstance(r, Trace):
            key = ("ok", tuple(_render_trace(r)))
        else:
            key = ("refused", r.step, r.event, r.reason, r.alternatives, tuple(_render_trace(r.prefix)))
        groups.setdefault(key, []).append(u.id)
        outcomes[key] = r
    code = EXIT_OK
    for key, ids in groups.items():
        print(f"universe {', '.join(ids)}:" if len(unis) > 1 else f"{m.name}:")
        if key[0] == "ok":
            print(ctx.status("PASS") + f": {len(outcomes[key].steps)} step(s) feasible")
            print("\n".join(key[1]))
        else:
            code = EXIT_FAIL
            r = outcomes[key]
            alts = ", ".join(r.alternatives) or "none"
            print(ctx.status("FAIL") + f": step {r.step} ({r.event}) is {r.reason}; enabled: {alts}")
            print("\n".join(key[5]))
    return code


def _file_views(ctx: _Ctx, project: Project, path: str):
    text = Path(path).read_text(encoding="utf-8")
    specs = parse_view_file(text, path)
    if not specs:
        raise VocheckError(f"{path} declares no view")
    # the file's own definition wins over a same-named project view
    names = {s.name for s in specs}
    project.views = [v for v in project.views if v.name not in names] + specs
    return specs


def cmd_view(ctx: _Ctx) -> int:
    a = ctx.args
    project = ctx.load(apply_views=False)
    specs = _file_views(ctx, project, a.file)
    if a.action == "apply":
        for spec in specs:
            derived = apply_view(project, spec)
            for fname, text in view_source(derived).items():
                if a.out:
                    Path(a.out).mkdir(parents=True, exist_ok=True)
                    (Path(a.out) / fname).write_text(text, encoding="utf-8")
                    print(f"wrote {Path(a.out) / fname}")
                else:
                    sys.stdout.write(f"// file: {fname}\n{text}")
        return EXIT_OK
    if a.action == "check":
        code = EXIT_OK
        for spec in specs:
            derived = apply_view(project, spec)
            v = check_view_refines_base(project, derived, max_states=ctx.max_states)
            if v.holds:
                print(f"{spec.name} of {spec.base}: {ctx.status('PASS')}: every behaviour of the view "
                      f"is a behaviour of {spec.base}")
            else:
                code = EXIT_FAIL
                print(f"{spec.name} of {spec.base}: {ctx.status('FAIL')}: {spec.base} cannot perform "
                      + " -> ".join(v.witness))
        return code
    cache = GraphCache(ctx.max_states)
    results, aggregates = [], []
    for spec in specs:
        if not spec.templates:
            continue
        run = run_template_vos(project, spec, scenarios_for(project, spec), cache=cache)
        results.extend(run.results)
        aggregates.extend(run.aggregates)
    name = Path(project.root).name if project.root else "project"
    sys.stdout.write(emit_report(results, ConflictReport(), a.format, project=name, templates=aggregates))
    return _exit_code([r.status for r in results] + [t.status for t in aggregates])


COMMANDS = {"check": cmd_check, "explore": cmd_explore, "trace": cmd_trace, "view": cmd_view}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    ctx = _Ctx(args)
    try:
        return COMMANDS[args.command](ctx)
    except AmbiguousStepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for c in exc.candidates or []:
            print(f"  {c}", file=sys.stderr)
        return EXIT_ERROR
    except ModelError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_ERROR
    except (VocheckError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

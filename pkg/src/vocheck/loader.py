"""Project discovery: ``models/*.ebs``, ``vos/*.vo`` and ``views/*.view``
anywhere below a root directory."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .errors import ModelError, VocheckError
from .model.ast import Project
from .model.project import parse_project
from .model.typecheck import typecheck
from .views import apply_view, parse_view_file
from .vo import check_unique, parse_vo_file


def _files(root: Path, suffix: str) -> list[Path]:
    return sorted(p for p in root.rglob(f"*{suffix}") if p.is_file())


def _rel(root: Path, p: Path) -> str:
    return p.relative_to(root).as_posix()


def load_project(root: str | Path, *, apply_views: bool = True, lenient: bool = True) -> Project:
    """Parse, link and typecheck every model below ``root``, then read its VOs
    and views. Views are applied (their derived machines registered) unless
    ``apply_views`` is false."""
    root = Path(root)
    if not root.is_dir():
        raise VocheckError(f"project directory {root} does not exist")
    sources = [(_rel(root, p), p.read_text(encoding="utf-8")) for p in _files(root, ".ebs")]
    project = parse_project(sources)
    project.root = str(root)
    problems = typecheck(project)
    if problems:
        raise ModelError(problems)
    for p in _files(root, ".vo"):
        project.vos.extend(parse_vo_file(p.read_text(encoding="utf-8"), _rel(root, p), lenient=lenient))
    check_unique(project.vos)
    for p in _files(root, ".view"):
        project.views.extend(parse_view_file(p.read_text(encoding="utf-8"), _rel(root, p)))
    if apply_views:
        for spec in project.views:
            apply_view(project, spec)
    return project


def corpus_dir(name: str = "hemodialysis") -> Path:
    """Path of a bundled example project."""
    path = Path(str(resources.files("vocheck") / "corpus" / name))
    if not path.is_dir():
        raise VocheckError(f"no bundled corpus named {name!r}")
    return path


def corpus_names() -> list[str]:
    base = Path(str(resources.files("vocheck") / "corpus"))
    return sorted(p.name for p in base.iterdir() if p.is_dir() and not p.name.startswith("_"))

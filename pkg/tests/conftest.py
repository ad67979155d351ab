from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from vocheck.loader import corpus_dir, load_project
from vocheck.model.project import parse_project
from vocheck.model.typecheck import typecheck

GOLDEN = Path(__file__).parent / "golden"


def build(*sources: str, check: bool = True):
    """Project from inline sources (one context or machine each)."""
    project = parse_project([(f"src{i}.ebs", text) for i, text in enumerate(sources)])
    if check:
        problems = typecheck(project)
        assert not problems, [str(p) for p in problems]
    return project


def write_project(root: Path, files: dict[str, str]) -> Path:
    for rel, text in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return root


@pytest.fixture(scope="session")
def corpus():
    return load_project(corpus_dir("hemodialysis"))


@pytest.fixture
def corpus_copy(tmp_path):
    """A writable copy of the bundled corpus."""
    dst = tmp_path / "hemodialysis"
    shutil.copytree(corpus_dir("hemodialysis"), dst)
    return dst


COUNTER = """
machine Counter
variables
  x : 1..5
init
  @a x := 1
end
event inc
  where
    @g x < 5
  then
    @a x := x + 1
end
end
"""

COUNTER_UNGUARDED = """
machine Counter
variables
  x : 1..5
init
  @a x := 1
end
event inc
  then
    @a x := x + 1
end
end
"""

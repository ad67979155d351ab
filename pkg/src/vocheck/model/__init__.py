"""The modelling language: syntax, typing and execution semantics."""

from .ast import INIT, Context, Event, Machine, Project, show
from .parser import parse_expr
from .project import parse_project
from .semantics import (State, Universe, enabled_events, eval_expr, fire, flat_events,
                        flatten_event, init_states, universes)
from .typecheck import typecheck

__all__ = [
    "INIT", "Context", "Event", "Machine", "Project", "State", "Universe", "enabled_events",
    "eval_expr", "fire", "flat_events", "flatten_event", "init_states", "parse_expr",
    "parse_project", "show", "typecheck", "universes",
]

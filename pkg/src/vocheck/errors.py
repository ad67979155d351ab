"""Exception hierarchy shared by all vocheck modules."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    message: str
    file: str | None = None
    line: int | None = None
    col: int | None = None
    machine: str | None = None
    event: str | None = None
    label: str | None = None

    def __str__(self) -> str:
        where = []
        if self.file:
            loc = self.file
            if self.line is not None:
                loc += f":{self.line}"
                if self.col is not None:
                    loc += f":{self.col}"
            where.append(loc)
        ctx = "/".join(p for p in (self.machine, self.event, self.label) if p)
        if ctx:
            where.append(ctx)
        prefix = " ".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message


class VocheckError(Exception):
    """Base class for every error raised by the toolkit."""


class ModelError(VocheckError):
    """Parse or resolution failure; carries one or more diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic] | Diagnostic):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class EvaluationFault(VocheckError):
    """Raised when an expression is not well-defined, e.g. a partial function
    applied outside its domain."""


class ExplorationError(VocheckError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class Refusal(VocheckError):
    """The question cannot be answered soundly (truncated graph, bound too
    small, state space too large)."""


class WellDefinednessError(VocheckError):
    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class LtlSyntaxError(VocheckError):
    def __init__(self, message: str, pos: int = 0):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


class AmbiguousStepError(VocheckError):
    def __init__(self, message: str, candidates: list[str] | None = None):
        super().__init__(message)
        self.candidates = list(candidates or [])


class VoSyntaxError(VocheckError):
    def __init__(self, message: str, file: str | None = None, line: int | None = None):
        loc = f"{file or '<vo>'}:{line}: " if line is not None else ""
        super().__init__(loc + message)
        self.file = file
        self.line = line


class ViewError(VocheckError):
    """A view specification is invalid against its base machine."""

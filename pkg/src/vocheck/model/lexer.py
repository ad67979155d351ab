"""Tokenizer shared by model, view and parameter parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import Diagnostic, ModelError


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | INT | LABEL | OP | EOF
    text: str
    line: int
    col: int
    offset: int


# longest first
_OPS = [
    "<=>", "-->", "+->", "|->", ":=", "/=", "<=", ">=", "=>", "<+", "..", "/:",
    "=", "<", ">", "+", "-", "*", "(", ")", "{", "}", "[", "]", ",", ":", ";", "/", "&",
]

_UNICODE = {
    "∈": "in", "∉": "/:", "≠": "/=", "≤": "<=", "≥": ">=", "⇒": "=>", "⇔": "<=>",
    "∧": "and", "∨": "or", "¬": "not", "↦": "|->", "→": "-->", "⇸": "+->",
    "‥": "..", "ℙ": "POW", "⊕": "<+",
}

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_INT = re.compile(r"[0-9]+")

KEYWORDS = frozenset({
    "context", "machine", "sets", "constants", "axioms", "variables", "invariants",
    "init", "event", "any", "where", "then", "refines", "extends", "sees", "end",
    "and", "or", "not", "in", "TRUE", "FALSE", "true", "false", "BOOL", "POW",
    "dom", "ran", "card",
})


def tokenize(text: str, file: str | None = None, line0: int = 1, col0: int = 1) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, line0, col0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if text.startswith("//", i) or c == "#":
            j = text.find("\n", i)
            j = n if j < 0 else j
            col += j - i
            i = j
            continue
        if c == "@":
            m = _IDENT.match(text, i + 1)
            if not m:
                raise ModelError(Diagnostic("label expected after '@'", file, line, col))
            toks.append(Token("LABEL", "@" + m.group(), line, col, i))
            col += m.end() - i
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            toks.append(Token("IDENT", m.group(), line, col, i))
            col += m.end() - i
            i = m.end()
            continue
        m = _INT.match(text, i)
        if m:
            toks.append(Token("INT", m.group(), line, col, i))
            col += m.end() - i
            i = m.end()
            continue
        if c in _UNICODE:
            mapped = _UNICODE[c]
            kind = "IDENT" if mapped[0].isalpha() else "OP"
            toks.append(Token(kind, mapped, line, col, i))
            i += 1
            col += 1
            continue
        for op in _OPS:
            if text.startswith(op, i):
                toks.append(Token("OP", op, line, col, i))
                i += len(op)
                col += len(op)
                break
        else:
            raise ModelError(Diagnostic(f"unexpected character {c!r}", file, line, col))
    toks.append(Token("EOF", "", line, col, n))
    return toks

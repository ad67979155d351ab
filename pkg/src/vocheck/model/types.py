"""Finite semantic types and canonical runtime values.

Runtime values are plain Python objects where possible:

* ``bool`` for BOOL, ``int`` for integers,
* :class:`EnumElem` for carrier-set elements,
* :class:`SetVal` for finite sets, :class:`MapVal` for finite functions,
* ``tuple`` ``(k, v)`` for a maplet that is not (yet) inside a set.

All containers store their members sorted, so structural equality coincides
with set equality and rendering is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Union


@dataclass(frozen=True)
class BoolType:
    def __str__(self) -> str:
        return "BOOL"


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def __str__(self) -> str:
        return f"{self.lo}..{self.hi}"


@dataclass(frozen=True)
class IntType:
    """Unbounded integer; only appears as the type of an expression."""

    def __str__(self) -> str:
        return "INT"


@dataclass(frozen=True)
class EnumType:
    name: str
    elements: tuple[str, ...] = field(compare=False, default=())

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class FuncType:
    domain: "SemanticType"
    codomain: "SemanticType"
    total: bool = True

    def __str__(self) -> str:
        arrow = "-->" if self.total else "+->"
        return f"({self.domain} {arrow} {self.codomain})"


@dataclass(frozen=True)
class PowType:
    element: "SemanticType"

    def __str__(self) -> str:
        return f"POW({self.element})"


@dataclass(frozen=True)
class PairType:
    left: "SemanticType"
    right: "SemanticType"

    def __str__(self) -> str:
        return f"({self.left} * {self.right})"


@dataclass(frozen=True)
class AnyType:
    """Element type of the empty set literal; compatible with everything."""

    def __str__(self) -> str:
        return "?"


SemanticType = Union[BoolType, IntRange, IntType, EnumType, FuncType, PowType, PairType, AnyType]

BOOL = BoolType()
INT = IntType()
ANY = AnyType()


@dataclass(frozen=True, order=True)
class EnumElem:
    set_name: str
    index: int
    name: str = field(compare=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class SetVal:
    items: tuple

    def __iter__(self) -> Iterator:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item: object) -> bool:
        return item in self.items


@dataclass(frozen=True, order=True)
class MapVal:
    pairs: tuple

    def lookup(self, key):
        for k, v in self.pairs:
            if k == key:
                return v
        raise KeyError(key)

    def domain(self) -> tuple:
        return tuple(k for k, _ in self.pairs)

    def as_dict(self) -> dict:
        return dict(self.pairs)


def make_set(items: Iterable) -> SetVal:
    return SetVal(tuple(sorted(set(items), key=sort_key)))


def make_map(pairs: Iterable[tuple]) -> MapVal:
    d: dict = {}
    for k, v in pairs:
        d[k] = v
    return MapVal(tuple(sorted(d.items(), key=lambda kv: sort_key(kv[0]))))


def sort_key(v: Any):
    # bools sort before ints so that True/1 never interleave within a type
    if isinstance(v, bool):
        return (0, int(v))
    if isinstance(v, int):
        return (1, v)
    if isinstance(v, EnumElem):
        return (2, v.set_name, v.index)
    if isinstance(v, SetVal):
        return (3, tuple(sort_key(i) for i in v.items))
    if isinstance(v, MapVal):
        return (4, tuple((sort_key(k), sort_key(x)) for k, x in v.pairs))
    if isinstance(v, tuple):
        return (5, tuple(sort_key(i) for i in v))
    raise TypeError(f"not a value: {v!r}")


def render(v: Any) -> str:
    """Canonical text form; parseable back by the expression parser."""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, EnumElem):
        return v.name
    if isinstance(v, SetVal):
        return "{" + ", ".join(render(i) for i in v.items) + "}"
    if isinstance(v, MapVal):
        return "{" + ", ".join(f"{render(k)} |-> {render(x)}" for k, x in v.pairs) + "}"
    if isinstance(v, tuple) and len(v) == 2:
        return f"{render(v[0])} |-> {render(v[1])}"
    raise TypeError(f"not a value: {v!r}")


def to_json(v: Any):
    if isinstance(v, bool) or isinstance(v, int):
        return v
    return render(v)


def enum_values(t: EnumType) -> list[EnumElem]:
    return [EnumElem(t.name, i, n) for i, n in enumerate(t.elements)]


def cardinality(t: SemanticType) -> int:
    if isinstance(t, BoolType):
        return 2
    if isinstance(t, IntRange):
        return t.hi - t.lo + 1
    if isinstance(t, EnumType):
        return len(t.elements)
    if isinstance(t, PowType):
        return 2 ** cardinality(t.element)
    if isinstance(t, FuncType):
        per = cardinality(t.codomain) + (0 if t.total else 1)
        return per ** cardinality(t.domain)
    raise ValueError(f"type {t} is not finite")


def enumerate_values(t: SemanticType) -> Iterator:
    """All values of a finite type, in canonical (lexicographic) order."""
    if isinstance(t, BoolType):
        yield False
        yield True
    elif isinstance(t, IntRange):
        yield from range(t.lo, t.hi + 1)
    elif isinstance(t, EnumType):
        yield from enum_values(t)
    elif isinstance(t, PowType):
        elems = list(enumerate_values(t.element))
        for mask in range(2 ** len(elems)):
            yield SetVal(tuple(e for i, e in enumerate(elems) if mask >> i & 1))
    elif isinstance(t, FuncType):
        keys = list(enumerate_values(t.domain))
        targets: list = list(enumerate_values(t.codomain))
        if not t.total:
            targets = [None] + targets
        for combo in itertools.product(targets, repeat=len(keys)):
            yield MapVal(tuple((k, v) for k, v in zip(keys, combo) if v is not None))
    else:
        raise ValueError(f"type {t} is not finite")


def contains(t: SemanticType, v: Any) -> bool:
    """Membership of a runtime value in a declared type."""
    if isinstance(t, BoolType):
        return isinstance(v, bool)
    if isinstance(t, (IntRange, IntType)):
        if isinstance(v, bool) or not isinstance(v, int):
            return False
        return isinstance(t, IntType) or t.lo <= v <= t.hi
    if isinstance(t, EnumType):
        return isinstance(v, EnumElem) and v.set_name == t.name
    if isinstance(t, PowType):
        return isinstance(v, SetVal) and all(contains(t.element, i) for i in v.items)
    if isinstance(t, FuncType):
        if not isinstance(v, MapVal):
            return False
        if not all(contains(t.domain, k) and contains(t.codomain, x) for k, x in v.pairs):
            return False
        if t.total:
            return len(v.pairs) == cardinality(t.domain)
        return True
    if isinstance(t, AnyType):
        return True
    return False


def erase(t: SemanticType) -> SemanticType:
    """Expression-level view of a declared type (ranges widen to INT)."""
    if isinstance(t, IntRange):
        return INT
    if isinstance(t, PowType):
        return PowType(erase(t.element))
    if isinstance(t, FuncType):
        return FuncType(erase(t.domain), erase(t.codomain), t.total)
    if isinstance(t, PairType):
        return PairType(erase(t.left), erase(t.right))
    return t


def compatible(a: SemanticType, b: SemanticType) -> bool:
    a, b = erase(a), erase(b)
    if isinstance(a, AnyType) or isinstance(b, AnyType):
        return True
    if isinstance(a, FuncType) and isinstance(b, FuncType):
        return compatible(a.domain, b.domain) and compatible(a.codomain, b.codomain)
    if isinstance(a, FuncType) and isinstance(b, PowType):
        return compatible(PowType(PairType(a.domain, a.codomain)), b)
    if isinstance(a, PowType) and isinstance(b, FuncType):
        return compatible(b, a)
    if isinstance(a, PowType) and isinstance(b, PowType):
        return compatible(a.element, b.element)
    if isinstance(a, PairType) and isinstance(b, PairType):
        return compatible(a.left, b.left) and compatible(a.right, b.right)
    if isinstance(a, EnumType) and isinstance(b, EnumType):
        return a.name == b.name
    return type(a) is type(b)

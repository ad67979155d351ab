"""Translation of NNF formulas to Büchi automata.

The construction is the classic tableau: each node records the obligations
that hold now (``old``) and those deferred to the next position (``next``).
Expansion of a set of obligations is memoized, so every distinct node is
built once. Edges into a node carry the literals of its ``old`` set, so an
edge is taken while reading the position those literals describe. The
generalized acceptance condition (one set per ``U`` subformula) is
degeneralized with a round-robin counter that skips every set the
current state already belongs to, and the result is shrunk by a
bisimulation quotient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .formula import (ATOMS, And, BoolConst, Formula, Next, Not, Or, Release, Until, is_nnf,
                      normalize, subformulas)

Literal = Formula  # an atom or Not(atom)
Label = frozenset  # conjunction of literals; empty means true


@lru_cache(maxsize=None)
def _label_key(lab: Label) -> tuple[str, ...]:
    return tuple(sorted(map(str, lab)))


@dataclass(frozen=True)
class Buchi:
    n_states: int
    initial: int
    edges: tuple[tuple[int, Label, int], ...]
    accepting: frozenset[int]
    out: tuple[tuple[tuple[Label, int], ...], ...] = field(repr=False, default=())

    @classmethod
    def make(cls, n: int, initial: int, edges, accepting) -> "Buchi":
        edges = tuple(sorted(set(edges), key=lambda e: (e[0], e[2], _label_key(e[1]))))
        out: list[list[tuple[Label, int]]] = [[] for _ in range(n)]
        for s, lab, d in edges:
            out[s].append((lab, d))
        return cls(n, initial, edges, frozenset(accepting), tuple(tuple(o) for o in out))


def _negate(lit: Formula) -> Formula:
    return lit.arg if isinstance(lit, Not) else Not(lit)


def _is_literal(f: Formula) -> bool:
    return isinstance(f, ATOMS) or (isinstance(f, Not) and isinstance(f.arg, ATOMS))


@dataclass
class _Node:
    id: int
    incoming: set[int]
    old: int  # bitmasks over the closure
    next: int


class _Closure:
    """Subformulas of ``f`` numbered in string order, so that picking the
    lowest set bit is a deterministic choice."""

    def __init__(self, f: Formula):
        self.formulas = sorted(set(subformulas(f)), key=str)
        idx = {g: i for i, g in enumerate(self.formulas)}
        n = len(self.formulas)
        self.kind = [""] * n
        self.left = [0] * n  # bitmask of the left / only child
        self.right = [0] * n
        self.neg = [0] * n  # bitmask of the complementary literal, if present
        for i, g in enumerate(self.formulas):
            if isinstance(g, BoolConst):
                self.kind[i] = "true" if g.value else "false"
            elif _is_literal(g):
                self.kind[i] = "lit"
                c = idx.get(_negate(g))
                self.neg[i] = 0 if c is None else 1 << c
            elif isinstance(g, Next):
                self.kind[i] = "next"
                self.left[i] = 1 << idx[g.arg]
            elif isinstance(g, (And, Or, Until, Release)):
                self.kind[i] = type(g).__name__.lower()
                self.left[i] = 1 << idx[g.left]
                self.right[i] = 1 << idx[g.right]
            else:
                raise TypeError(g)

    def members(self, mask: int) -> list[int]:
        out = []
        while mask:
            low = mask & -mask
            out.append(low.bit_length() - 1)
            mask ^= low
        return out


def _expand(cl: _Closure, new: int) -> list[tuple[int, int]]:
    """All consistent (old, next) pairs that discharge the obligations in ``new``."""
    out: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    stack = [(new, 0, 0)]
    while stack:
        new, old, nxt = stack.pop()
        if not new:
            if (old, nxt) not in seen:
                seen.add((old, nxt))
                out.append((old, nxt))
            continue
        low = new & -new
        g = low.bit_length() - 1
        new ^= low
        kind = cl.kind[g]
        if kind == "false":
            continue
        if kind in ("true", "lit"):
            if not cl.neg[g] & old:
                stack.append((new, old | low, nxt))
        elif kind == "and":
            old |= low
            stack.append((new | ((cl.left[g] | cl.right[g]) & ~old), old, nxt))
        elif kind == "next":
            stack.append((new, old | low, nxt | cl.left[g]))
        else:
            if kind == "until":
                first, first_next, second = cl.left[g], low, cl.right[g]
            elif kind == "release":
                first, first_next, second = cl.right[g], low, cl.left[g] | cl.right[g]
            else:
                first, first_next, second = cl.left[g], 0, cl.right[g]
            old |= low
            # the first branch is explored first; order only affects numbering
            stack.append((new | (second & ~old), old, nxt))
            stack.append((new | (first & ~old), old, nxt | first_next))
    return out


def tableau(f: Formula) -> tuple[list[_Node], int, _Closure]:
    """Expand ``f`` (in NNF) into tableau nodes. A node is identified by its
    (old, next) pair; node 0 is the pseudo-initial state and never appears as
    a real node."""
    if not is_nnf(f):
        raise ValueError("formula must be in negation normal form")
    cl = _Closure(f)
    memo: dict[int, list[tuple[int, int]]] = {}

    def expand(mask: int) -> list[tuple[int, int]]:
        if mask not in memo:
            memo[mask] = _expand(cl, mask)
        return memo[mask]

    nodes: dict[tuple[int, int], _Node] = {}
    work: list[_Node] = []

    def reach(key: tuple[int, int], src: int) -> None:
        node = nodes.get(key)
        if node is None:
            node = nodes[key] = _Node(len(nodes) + 1, set(), key[0], key[1])
            work.append(node)
        node.incoming.add(src)

    for key in expand(1 << cl.formulas.index(f)):
        reach(key, 0)
    i = 0
    while i < len(work):
        node = work[i]
        i += 1
        for key in expand(node.next):
            reach(key, node.id)
    return list(nodes.values()), 0, cl


def _generalized(f: Formula):
    nodes, init, cl = tableau(f)
    lits = sum(1 << i for i, k in enumerate(cl.kind) if k == "lit")
    seen_old = 0
    for n in nodes:
        seen_old |= n.old
    untils = [i for i in cl.members(seen_old) if cl.kind[i] == "until"]
    index = {n.id: i + 1 for i, n in enumerate(nodes)}
    index[init] = 0
    n_states = len(nodes) + 1
    edges = []
    for n in nodes:
        label = frozenset(cl.formulas[i] for i in cl.members(n.old & lits))
        for src in n.incoming:
            edges.append((index[src], label, index[n.id]))
    acc_sets = []
    for u in untils:
        acc = {0}
        for n in nodes:
            if not n.old >> u & 1 or n.old & cl.right[u]:
                acc.add(index[n.id])
        acc_sets.append(acc)
    return n_states, edges, acc_sets


def _degeneralize(n: int, edges, acc_sets):
    if not acc_sets:
        return n, 0, edges, set(range(n))
    k = len(acc_sets)
    ids: dict[tuple[int, int], int] = {(0, 0): 0}
    out_edges = []
    by_src: dict[int, list] = {}
    for s, lab, d in edges:
        by_src.setdefault(s, []).append((lab, d))
    accepting: set[int] = set()
    work = [(0, 0)]
    while work:
        q, i = work.pop()
        # advance past every set q belongs to; wrapping past the last set
        # completes a round, which is what acceptance counts
        j, wrapped = i, False
        for _ in range(k):
            if q not in acc_sets[j]:
                break
            j = (j + 1) % k
            wrapped = wrapped or j == 0
        if wrapped:
            accepting.add(ids[(q, i)])
        for lab, d in by_src.get(q, []):
            key = (d, j)
            if key not in ids:
                ids[key] = len(ids)
                work.append(key)
            out_edges.append((ids[(q, i)], lab, ids[key]))
    return len(ids), 0, out_edges, accepting


def _trim(n: int, init: int, edges, accepting):
    """Drop states unreachable from ``init``."""
    succ: dict[int, list[int]] = {}
    for s, _, d in edges:
        succ.setdefault(s, []).append(d)
    seen = {init}
    work = [init]
    while work:
        s = work.pop()
        for d in succ.get(s, []):
            if d not in seen:
                seen.add(d)
                work.append(d)
    order = sorted(seen)
    remap = {s: i for i, s in enumerate(order)}
    edges = [(remap[s], lab, remap[d]) for s, lab, d in edges if s in seen]
    return len(order), remap[init], edges, {remap[s] for s in accepting if s in seen}


def _minimize(n: int, init: int, edges, accepting):
    """Bisimulation quotient. The initial state has no incoming edges, so its
    acceptance is irrelevant and it may join any block with the same moves."""
    out: dict[int, list] = {s: [] for s in range(n)}
    has_incoming = set()
    for s, lab, d in edges:
        out[s].append((lab, d))
        has_incoming.add(d)
    free_init = init not in has_incoming
    rest = [s for s in range(n) if not (free_init and s == init)]
    block = {s: (s in accepting) for s in rest}
    while True:
        sig = {s: (block[s], frozenset((lab, block[d]) for lab, d in out[s])) for s in rest}
        ids: dict = {}
        new_block = {s: ids.setdefault(sig[s], len(ids)) for s in rest}
        if len(set(new_block.values())) == len(set(block.values())):
            block = new_block
            break
        block = new_block
    if free_init:
        init_moves = frozenset((lab, block[d]) for lab, d in out[init])
        target = None
        for s in rest:
            if frozenset((lab, block[d]) for lab, d in out[s]) == init_moves:
                target = block[s]
                break
        if target is None:
            target = max(block.values(), default=-1) + 1
        block[init] = target
    # renumber blocks in BFS order from the initial block for stable output
    order: list = []
    seen = set()
    work = [block[init]]
    by_block: dict = {}
    for s in range(n):
        by_block.setdefault(block[s], []).append(s)
    while work:
        b = work.pop(0)
        if b in seen:
            continue
        seen.add(b)
        order.append(b)
        for s in by_block[b]:
            for _, d in sorted(out[s], key=lambda e: (e[1], _label_key(e[0]))):
                if block[d] not in seen:
                    work.append(block[d])
    remap = {b: i for i, b in enumerate(order)}
    new_edges = {(remap[block[s]], lab, remap[block[d]]) for s, lab, d in edges}
    new_acc = {remap[block[s]] for s in accepting if not (free_init and s == init)}
    if free_init and block[init] not in {block[s] for s in rest}:
        new_acc.add(remap[block[init]])  # isolated initial state: acceptance unused
    return len(order), remap[block[init]], new_edges, new_acc


def to_buchi(f: Formula, *, minimize: bool = True) -> Buchi:
    """Büchi automaton accepting exactly the words satisfying ``f``.

    ``f`` is normalized first, so any formula is accepted.
    """
    f = normalize(f)
    n, edges, acc_sets = _generalized(f)
    n, init, edges, accepting = _degeneralize(n, edges, acc_sets)
    n, init, edges, accepting = _trim(n, init, edges, accepting)
    if minimize:
        n, init, edges, accepting = _minimize(n, init, edges, accepting)
    return Buchi.make(n, init, edges, accepting)

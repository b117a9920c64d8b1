"""Directed multigraphs, incidence matrices, admissible words, connectors.

Edges are identified with positive integers.  Infinite edge sets are never
materialized: every operation takes an explicit truncation bound N and only
touches edges 1..N.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from .errors import InvalidWordError, NotIrreducibleError


@dataclass(frozen=True)
class Multigraph:
    """Finite vertex set with a countable family of directed edges.

    ``n_edges is None`` means the edge set is infinite; callers must then
    always pass a truncation bound.
    """

    vertices: tuple
    initial: Callable[[int], object]
    terminal: Callable[[int], object]
    n_edges: Optional[int] = None

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("vertex set must be nonempty")

    def check_edge(self, e: int) -> None:
        if not isinstance(e, (int, np.integer)) or e < 1:
            raise InvalidWordError(f"edge index must be a positive integer, got {e!r}")
        if self.n_edges is not None and e > self.n_edges:
            raise InvalidWordError(f"edge {e} out of range (n_edges={self.n_edges})")

    @classmethod
    def single_vertex(cls, n_edges: Optional[int] = None) -> "Multigraph":
        """All edges are loops at one vertex (ordinary iterated function systems)."""
        return cls(vertices=(0,), initial=lambda e: 0, terminal=lambda e: 0,
                   n_edges=n_edges)


class IncidenceMatrix:
    """0/1 matrix over edge pairs deciding which edge may follow which.

    Backed either by a dense array (finite alphabets) or by a predicate
    (infinite alphabets).  ``entry(u, v) == 1`` requires that the terminal
    vertex of u equals the initial vertex of v; dense constructors check
    this eagerly, rule-based ones on every query.
    """

    def __init__(self, graph: Multigraph, rule: Callable[[int, int], int],
                 dense: Optional[np.ndarray] = None, full_shift: bool = False):
        self.graph = graph
        self._rule = rule
        self._dense = dense
        self.full_shift = full_shift

    @classmethod
    def full(cls, graph: Optional[Multigraph] = None) -> "IncidenceMatrix":
        g = graph if graph is not None else Multigraph.single_vertex()
        return cls(g, lambda u, v: 1, full_shift=True)

    @classmethod
    def from_dense(cls, matrix, graph: Optional[Multigraph] = None) -> "IncidenceMatrix":
        m = np.asarray(matrix, dtype=np.int8)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("incidence matrix must be square")
        g = graph if graph is not None else Multigraph.single_vertex(n_edges=m.shape[0])
        for u in range(1, m.shape[0] + 1):
            for v in range(1, m.shape[1] + 1):
                if m[u - 1, v - 1] and g.terminal(u) != g.initial(v):
                    raise ValueError(
                        f"entry({u},{v})=1 but terminal({u}) != initial({v})")
        return cls(g, lambda u, v: int(m[u - 1, v - 1]), dense=m,
                   full_shift=bool(m.all()))

    @classmethod
    def from_rule(cls, rule: Callable[[int, int], int],
                  graph: Optional[Multigraph] = None) -> "IncidenceMatrix":
        g = graph if graph is not None else Multigraph.single_vertex()

        def checked(u, v):
            a = int(bool(rule(u, v)))
            if a and g.terminal(u) != g.initial(v):
                raise ValueError(f"entry({u},{v})=1 but terminal({u}) != initial({v})")
            return a

        return cls(g, checked)

    def entry(self, u: int, v: int) -> int:
        self.graph.check_edge(u)
        self.graph.check_edge(v)
        if self.full_shift:
            return 1
        return int(self._rule(u, v))

    def successors(self, u: int, N: int) -> tuple:
        return tuple(v for v in range(1, N + 1) if self.entry(u, v))

    def dense_block(self, N: int) -> np.ndarray:
        """The upper-left N x N block as a dense array (1-based edges)."""
        if self.full_shift:
            return np.ones((N, N), dtype=np.int8)
        if self._dense is not None and self._dense.shape[0] >= N:
            return self._dense[:N, :N]
        out = np.zeros((N, N), dtype=np.int8)
        for u in range(1, N + 1):
            for v in range(1, N + 1):
                out[u - 1, v - 1] = self.entry(u, v)
        return out


@dataclass(frozen=True)
class Word:
    """A finite sequence of edge indices; the empty word is allowed."""

    symbols: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def concat(self, other: "Word") -> "Word":
        return Word(self.symbols + tuple(other))

    def __repr__(self):
        return f"Word{self.symbols}"


def is_admissible(word, A: IncidenceMatrix) -> bool:
    """True iff every consecutive pair of the word satisfies ``entry == 1``.

    Empty and length-1 words are admissible by vacuity.  Unknown edge
    indices raise :class:`InvalidWordError`.
    """
    syms = tuple(word)
    for s in syms:
        A.graph.check_edge(s)
    return all(A.entry(syms[i], syms[i + 1]) for i in range(len(syms) - 1))


def enumerate_words(A: IncidenceMatrix, n: int, N: int) -> Iterator[Word]:
    """Yield the admissible words of length n over edges 1..N, in
    lexicographic order, each exactly once."""
    if n < 1 or N < 1:
        raise ValueError("word length and truncation must be >= 1")
    succ = {u: A.successors(u, N) for u in range(1, N + 1)}

    def rec(prefix):
        if len(prefix) == n:
            yield Word(prefix)
            return
        choices = succ[prefix[-1]] if prefix else range(1, N + 1)
        for v in choices:
            yield from rec(prefix + (v,))

    yield from rec(())


def count_words(A: IncidenceMatrix, n: int, N: int) -> int:
    """Number of admissible length-n words over 1..N via matrix powers."""
    m = A.dense_block(N).astype(object)
    v = np.ones(N, dtype=object)
    for _ in range(n - 1):
        v = m @ v
    return int(v.sum())


@dataclass(frozen=True)
class IrreducibilityWitness:
    """Finite connector set W certifying finite irreducibility below a
    truncation bound: every edge pair (u, v) <= N admits some w in W with
    u·w·v admissible."""

    connectors: tuple
    truncation: int

    def verify(self, A: IncidenceMatrix, N: Optional[int] = None) -> bool:
        N = self.truncation if N is None else N
        for u in range(1, N + 1):
            for v in range(1, N + 1):
                if not any(_connects(A, u, w, v) for w in self.connectors):
                    return False
        return True


def _connects(A: IncidenceMatrix, u: int, w: Word, v: int) -> bool:
    syms = (u,) + tuple(w) + (v,)
    return all(A.entry(syms[i], syms[i + 1]) for i in range(len(syms) - 1))


def find_irreducibility_witness(A: IncidenceMatrix, N: int, max_len: int,
                                allow_empty: bool = True) -> IrreducibilityWitness:
    """Greedy cover of all edge pairs <= N by connector words of length
    <= max_len.

    Pairs are walked in lexicographic order; a pair first tries connectors
    already chosen, then adds the lexicographically smallest shortest new
    one.  The empty word is considered unless ``allow_empty`` is False.
    Raises :class:`NotIrreducibleError` naming the first pair with no
    connector in range.
    """
    if N < 1 or max_len < 0:
        raise ValueError("need N >= 1 and max_len >= 0")
    chosen: list[Word] = []

    def shortest_connector(u, v):
        lengths = range(0 if allow_empty else 1, max_len + 1)
        for length in lengths:
            if length == 0:
                if A.entry(u, v):
                    return Word(())
                continue
            # breadth-first in lexicographic order over words of this length
            queue = deque([()])
            for depth in range(length):
                nxt = deque()
                while queue:
                    prefix = queue.popleft()
                    prev = prefix[-1] if prefix else u
                    for s in range(1, N + 1):
                        if A.entry(prev, s):
                            nxt.append(prefix + (s,))
                queue = nxt
            for cand in queue:
                if A.entry(cand[-1], v):
                    return Word(cand)
        return None

    for u in range(1, N + 1):
        for v in range(1, N + 1):
            if any(_connects(A, u, w, v) for w in chosen):
                continue
            w = shortest_connector(u, v)
            if w is None:
                raise NotIrreducibleError((u, v), max_len)
            chosen.append(w)
    return IrreducibilityWitness(connectors=tuple(chosen), truncation=N)

"""Exact canonical forms for small unlabeled graphs.

A graph on ``n`` vertices is encoded by the upper triangle of its adjacency
matrix, read row by row: pairs ``(0,1), (0,2), ..., (0,n-1), (1,2), ...``.
The canonical code is the smallest such bitstring over all vertex
permutations, written as ``"<n>:<hex>"``. Brute force over ``n!``
permutations is exact and cheap for the sizes used here (``n <= 6``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

MAX_CANON_SIZE = 6

Edge = tuple[int, int]


def _pairs(n: int) -> list[Edge]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def pattern_of(n: int, edges: Iterable[Edge]) -> int:
    """Adjacency bit pattern with pair ``(0,1)`` as the most significant bit."""
    index = {p: k for k, p in enumerate(_pairs(n))}
    npairs = len(index)
    bits = 0
    for u, v in edges:
        if u == v:
            raise ValueError(f"self-loop at vertex {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
        a, b = (u, v) if u < v else (v, u)
        bits |= 1 << (npairs - 1 - index[(a, b)])
    return bits


def edges_of(n: int, pattern: int) -> tuple[Edge, ...]:
    pairs = _pairs(n)
    npairs = len(pairs)
    return tuple(p for k, p in enumerate(pairs) if pattern >> (npairs - 1 - k) & 1)


def is_connected(n: int, edges: Iterable[Edge]) -> bool:
    if n == 0:
        return False
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


def format_code(n: int, pattern: int) -> str:
    width = max(1, (n * (n - 1) // 2 + 3) // 4)
    return f"{n}:{pattern:0{width}x}"


def parse_code(code: str) -> tuple[int, int]:
    head, _, tail = code.partition(":")
    return int(head), int(tail, 16)


@lru_cache(maxsize=None)
def canonize_pattern(n: int, pattern: int) -> tuple[int, tuple[int, ...]]:
    """Return ``(canonical_pattern, perm)`` for a graph given by its pattern.

    ``perm[r]`` is the input vertex placed at canonical position ``r``. When
    several permutations reach the minimal code (automorphisms), the
    lexicographically smallest ``perm`` is returned.
    """
    pairs = _pairs(n)
    npairs = len(pairs)
    adj = [[False] * n for _ in range(n)]
    for k, (i, j) in enumerate(pairs):
        if pattern >> (npairs - 1 - k) & 1:
            adj[i][j] = adj[j][i] = True
    best = None
    best_perm: tuple[int, ...] = tuple(range(n))
    # permutations() yields in lexicographic order, so the first minimum wins ties
    for perm in itertools.permutations(range(n)):
        bits = 0
        for i, j in pairs:
            bits = (bits << 1) | adj[perm[i]][perm[j]]
        if best is None or bits < best:
            best = bits
            best_perm = perm
    return (best if best is not None else 0), best_perm


def canonical_form(n: int, edges: Iterable[Edge], max_size: int = MAX_CANON_SIZE) -> str:
    """Canonical code of a connected graph with ``n <= max_size`` vertices.

    >>> canonical_form(3, [(0, 1), (1, 2)]) == canonical_form(3, [(2, 0), (0, 1)])
    True
    """
    edges = list(edges)
    if n < 1:
        raise ValueError("graph must have at least one vertex")
    if n > max_size:
        raise ValueError(f"graph has {n} vertices, over the limit of {max_size}")
    if not is_connected(n, edges):
        raise ValueError("graph is disconnected")
    canon, _ = canonize_pattern(n, pattern_of(n, edges))
    return format_code(n, canon)


@dataclass(frozen=True, order=True)
class Structure:
    """An isomorphism class of connected unlabeled graphs.

    Vertices are numbered in canonical order, so ``edges`` is the canonical
    representative and two structures compare equal iff they are isomorphic.
    """

    canon: str
    n: int
    edges: tuple[Edge, ...]

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "Structure":
        code = canonical_form(n, edges)
        return cls.from_code(code)

    @classmethod
    def from_code(cls, code: str) -> "Structure":
        n, pattern = parse_code(code)
        return cls(format_code(n, pattern), n, edges_of(n, pattern))

    @property
    def degrees(self) -> tuple[int, ...]:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return tuple(deg)

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def induced(self, vertices: Iterable[int]) -> tuple[int, tuple[Edge, ...]]:
        """Induced subgraph on ``vertices``, relabelled ``0..k-1`` in sorted order."""
        vs = sorted(vertices)
        pos = {v: i for i, v in enumerate(vs)}
        sub = tuple((pos[u], pos[v]) for u, v in self.edges if u in pos and v in pos)
        return len(vs), sub

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges], "canon": self.canon}

    @classmethod
    def from_dict(cls, d: dict) -> "Structure":
        s = cls.from_edges(int(d["n"]), [tuple(e) for e in d["edges"]])
        if "canon" in d and d["canon"] != s.canon:
            raise ValueError(f"stored canon {d['canon']!r} does not match edges ({s.canon!r})")
        return s


def connected_induced_substructures(s: Structure, size: int) -> list[Structure]:
    """Distinct connected induced substructures of ``s`` with ``size`` vertices."""
    found = set()
    for subset in itertools.combinations(range(s.n), size):
        k, sub = s.induced(subset)
        if is_connected(k, sub):
            found.add(format_code(k, canonize_pattern(k, pattern_of(k, sub))[0]))
    return sorted((Structure.from_code(c) for c in found), key=lambda t: t.canon)

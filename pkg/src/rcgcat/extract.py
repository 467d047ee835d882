"""Sub-RCG extraction: every induced occurrence of a structure inside an RCG.

Each RCG vertex in turn serves as the anchor of a depth-first growth of
connected vertex sets (each set is reached from exactly one anchor, its
smallest vertex). A grown set is kept when its induced subgraph has the
canonical code of the wanted structure. Working per vertex set gives one
embedding per set for free; among the automorphic alignments the
lexicographically smallest vertex map is recorded.

Results are indexed per graph and per size, so a single pass over a graph
serves every structure of that size.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .canon import MAX_CANON_SIZE, Structure, canonize_pattern, format_code
from .rcg import Rcg


@dataclass(frozen=True)
class Embedding:
    """A sub-RCG: ``vertex_map[r]`` is the RCG vertex playing structure vertex ``r``."""

    structure: Structure
    vertex_map: tuple[int, ...]
    graph: Rcg

    @property
    def vertex_set(self) -> tuple[int, ...]:
        return tuple(sorted(self.vertex_map))

    def features(self) -> np.ndarray:
        return self.graph.features[list(self.vertex_map)]

    def to_dict(self) -> dict:
        return {"canon": self.structure.canon, "vertex_map": list(self.vertex_map)}


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """All embeddings of one structure in one graph (possibly none)."""

    structure: Structure
    graph: Rcg
    maps: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.maps)

    @property
    def embeddings(self) -> list[Embedding]:
        return [Embedding(self.structure, m, self.graph) for m in self.maps]

    def features(self) -> np.ndarray:
        """Stacked vertex features, shape ``(count, |S|, D)``."""
        if not self.maps:
            return np.zeros((0, self.structure.n, self.graph.features.shape[1]))
        return self.graph.features[np.asarray(self.maps)]


@lru_cache(maxsize=None)
def _alignment(k: int, pattern: int) -> tuple[str, tuple[int, ...]]:
    canon, perm = canonize_pattern(k, pattern)
    return format_code(k, canon), perm


def connected_vertex_sets(adj: Sequence[frozenset[int]], max_size: int) -> Iterator[tuple[int, ...]]:
    """Yield every connected vertex set of size ``1..max_size`` exactly once.

    Depth-first growth from each anchor ``v`` adds only vertices above ``v``
    taken from the exclusive neighbourhood of the current set.
    """
    n = len(adj)

    def grow(sub: list[int], closed: set[int], ext: list[int], anchor: int):
        yield tuple(sub)
        if len(sub) == max_size:
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            new_ext = list(ext)
            added = []
            for u in adj[w]:
                if u > anchor and u not in closed:
                    new_ext.append(u)
                    added.append(u)
            closed.update(added)
            sub.append(w)
            yield from grow(sub, closed, new_ext, anchor)
            sub.pop()
            closed.difference_update(added)

    for v in range(n):
        ext = sorted((u for u in adj[v] if u > v), reverse=True)
        closed = {v, *adj[v]}
        yield from grow([v], closed, ext, v)


def _induced_pattern(adj: Sequence[frozenset[int]], vs: Sequence[int]) -> int:
    bits = 0
    k = len(vs)
    for i in range(k):
        nb = adj[vs[i]]
        for j in range(i + 1, k):
            bits = (bits << 1) | (vs[j] in nb)
    return bits


def build_index(g: Rcg, max_size: int) -> dict[int, dict[str, list[tuple[int, ...]]]]:
    """``size -> canon -> sorted vertex maps`` for all connected induced subgraphs."""
    if max_size > MAX_CANON_SIZE:
        raise ValueError(f"max_size {max_size} exceeds {MAX_CANON_SIZE}")
    adj = g.adjacency
    index: dict[int, dict[str, list[tuple[int, ...]]]] = {k: {} for k in range(1, max_size + 1)}
    for sub in connected_vertex_sets(adj, max_size):
        vs = sorted(sub)
        code, perm = _alignment(len(vs), _induced_pattern(adj, vs))
        index[len(vs)].setdefault(code, []).append(tuple(vs[p] for p in perm))
    for by_code in index.values():
        for maps in by_code.values():
            maps.sort(key=sorted)
    return index


def _dfs_embeddings(s: Structure, g: Rcg) -> list[tuple[int, ...]]:
    """Embeddings of a single structure without building the full index."""
    if s.n > g.n:
        return []
    adj = g.adjacency
    want = sorted(s.degrees, reverse=True)
    found = []
    for sub in connected_vertex_sets(adj, s.n):
        if len(sub) != s.n:
            continue
        vs = sorted(sub)
        # cheap reject on the induced degree sequence before canonising
        local = sorted((sum(1 for u in vs if u in adj[v]) for v in vs), reverse=True)
        if local != want:
            continue
        code, perm = _alignment(s.n, _induced_pattern(adj, vs))
        if code == s.canon:
            found.append(tuple(vs[p] for p in perm))
    found.sort(key=sorted)
    return found


def extract_subrcgs(s: Structure, g: Rcg) -> list[Embedding]:
    """All induced embeddings of ``s`` in ``g``, one per vertex set, sorted by vertex set."""
    return [Embedding(s, m, g) for m in _dfs_embeddings(s, g)]


class EmbeddingCache:
    """Memo of embeddings keyed by ``(structure canon, graph)``.

    Graphs are keyed by identity; the cache keeps a reference to each graph
    it has seen so identities are never recycled while the cache lives.
    """

    def __init__(self, max_size: int = MAX_CANON_SIZE):
        self.max_size = max_size
        self._lock = threading.Lock()
        self._index: dict[int, tuple[Rcg, dict]] = {}
        self.hits = 0
        self.misses = 0

    def index(self, g: Rcg) -> dict[int, dict[str, list[tuple[int, ...]]]]:
        key = id(g)
        with self._lock:
            entry = self._index.get(key)
            if entry is not None:
                self.hits += 1
                return entry[1]
        idx = build_index(g, self.max_size)
        with self._lock:
            entry = self._index.setdefault(key, (g, idx))
            self.misses += 1
            return entry[1]

    def maps(self, s: Structure, g: Rcg) -> tuple[tuple[int, ...], ...]:
        if s.n > self.max_size:
            raise ValueError(f"structure of size {s.n} exceeds cache limit {self.max_size}")
        if s.n > g.n:
            return ()
        return tuple(self.index(g)[s.n].get(s.canon, ()))

    def embedding_set(self, s: Structure, g: Rcg) -> EmbeddingSet:
        return EmbeddingSet(s, g, self.maps(s, g))

    def codes(self, g: Rcg, size: int) -> set[str]:
        if size > g.n:
            return set()
        return set(self.index(g)[size])


def extract_feature_set(refined: Sequence[Structure], g: Rcg,
                        cache: EmbeddingCache | None = None) -> list[EmbeddingSet]:
    cache = cache if cache is not None else EmbeddingCache()
    return [cache.embedding_set(s, g) for s in refined]

"""Level-wise mining of frequent unlabeled structures across a set of RCGs.

Vertex features are ignored here; only topology counts. The number of
possible sub-RCGs explodes with graph size, so mining is capped at small
structures (six vertices by default, the limit of exact canonical codes).

Level ``k + 1`` candidates come from frequent level-``k`` structures by
attaching one new vertex to any non-empty subset of the existing vertices.
Under induced containment every connected structure has at least two
non-cut vertices, so this reaches every connected structure, and a
candidate is dropped unless every connected ``k``-vertex substructure
obtained by deleting one vertex is itself frequent.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

from .canon import MAX_CANON_SIZE, Structure, canonical_form, is_connected
from .extract import EmbeddingCache, _dfs_embeddings
from .rcg import Rcg

__all__ = ["MinedStructure", "Structure", "canonical_form", "contains", "mine_frequent",
           "dump_mined", "load_mined"]


@dataclass(frozen=True)
class MinedStructure:
    structure: Structure
    support: float

    @property
    def canon(self) -> str:
        return self.structure.canon

    @property
    def n(self) -> int:
        return self.structure.n

    def to_dict(self) -> dict:
        return {**self.structure.to_dict(), "support": self.support}

    @classmethod
    def from_dict(cls, d: dict) -> "MinedStructure":
        return cls(Structure.from_dict(d), float(d["support"]))


def contains(s: Structure, g: Rcg, cache: EmbeddingCache | None = None) -> bool:
    """True iff ``g`` has a connected induced subgraph isomorphic to ``s``."""
    if cache is not None:
        return bool(cache.maps(s, g))
    return bool(_dfs_embeddings(s, g))


def _one_vertex_extensions(s: Structure) -> set[str]:
    n = s.n
    out = set()
    for r in range(1, n + 1):
        for attach in itertools.combinations(range(n), r):
            edges = list(s.edges) + [(a, n) for a in attach]
            out.add(canonical_form(n + 1, edges))
    return out


def _deletion_parents(s: Structure) -> set[str]:
    """Codes of the connected substructures left after deleting one vertex."""
    out = set()
    for drop in range(s.n):
        keep = [v for v in range(s.n) if v != drop]
        k, sub = s.induced(keep)
        if is_connected(k, sub):
            out.add(canonical_form(k, sub))
    return out


def mine_frequent(rcgs: Sequence[Rcg], min_support: float = 0.2,
                  max_structure_size: int = MAX_CANON_SIZE,
                  cache: EmbeddingCache | None = None) -> list[MinedStructure]:
    """Structures with support strictly above ``min_support``, sorted by ``(size, canon)``.

    Support is the fraction of graphs holding at least one embedding.
    """
    if not rcgs:
        raise ValueError("empty training set")
    if not 0.0 < min_support <= 1.0:
        raise ValueError("min_support must lie in (0, 1]")
    if not 2 <= max_structure_size <= MAX_CANON_SIZE:
        raise ValueError(f"max_structure_size must lie in [2, {MAX_CANON_SIZE}]")
    if cache is None:
        cache = EmbeddingCache(max_structure_size)
    elif cache.max_size < max_structure_size:
        raise ValueError("cache max_size is below max_structure_size")
    n = len(rcgs)

    # graph ids containing each structure, per size
    occurs: dict[int, dict[str, set[int]]] = {}

    def tids(size: int) -> dict[str, set[int]]:
        if size not in occurs:
            table: dict[str, set[int]] = {}
            for gi, g in enumerate(rcgs):
                for code in cache.codes(g, size):
                    table.setdefault(code, set()).add(gi)
            occurs[size] = table
        return occurs[size]

    def frequent(count: int) -> bool:
        return count / n > min_support

    result: list[MinedStructure] = []
    edge = Structure.from_edges(2, [(0, 1)])
    level = {}
    if frequent(len(tids(2).get(edge.canon, ()))):
        level = {edge.canon: edge}
    size = 2
    while level:
        table = tids(size)
        for code in sorted(level):
            result.append(MinedStructure(level[code], len(table[code]) / n))
        if size == max_structure_size:
            break
        candidates: set[str] = set()
        for s in level.values():
            candidates |= _one_vertex_extensions(s)
        nxt_table = tids(size + 1)
        nxt = {}
        for code in sorted(candidates):
            cand = Structure.from_code(code)
            parents = _deletion_parents(cand)
            if not parents <= level.keys():
                continue
            # support can only come from graphs holding every parent
            allowed = set.intersection(*(table[p] for p in parents))
            have = nxt_table.get(code, set()) & allowed
            if frequent(len(have)):
                nxt[code] = cand
        level = nxt
        size += 1
    return result


def dump_mined(mined: Sequence[MinedStructure]) -> str:
    return json.dumps([m.to_dict() for m in mined], indent=1)


def load_mined(text: str) -> list[MinedStructure]:
    return [MinedStructure.from_dict(d) for d in json.loads(text)]

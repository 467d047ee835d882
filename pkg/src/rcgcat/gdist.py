"""Distances between sub-RCGs and between structures observed in two RCGs.

Three levels:

* ``subrcg_distance`` compares two equally sized sub-RCGs vertex by vertex
  (position ``r`` against position ``r``, canonical structure order). The
  summed squared feature distance is scaled by ``1 / (2 |S|)``; features are
  probability vectors, so each term is at most 2 and the result is in [0, 1].
* ``structure_distance_equal`` averages that over every pair of embeddings.
* ``structure_distance`` weights by structure supports and covers the cases
  where a structure is missing from a graph or the two structures differ in
  size (then the smaller one is compared against each same-size connected
  substructure of the larger one, and those distances are averaged).

``DistanceEngine`` evaluates ``structure_distance`` for whole blocks of graph
pairs at once. The mean over embedding pairs has the closed form

    mean ||x_i - y_j||^2 = mean ||x_i||^2 + mean ||y_j||^2 - 2 <mean x, mean y>

per position, so each (structure, graph) pair is reduced once to a mean
feature matrix and a mean squared norm, and a block of distances is a single
matrix product.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .canon import Structure, connected_induced_substructures
from .extract import Embedding, EmbeddingCache, EmbeddingSet
from .rcg import Rcg


def subrcg_distance(e: Embedding, e2: Embedding) -> float:
    if e.structure.n != e2.structure.n:
        raise ValueError(f"size mismatch: {e.structure.n} vs {e2.structure.n}")
    diff = e.features() - e2.features()
    return float((diff * diff).sum() / (2.0 * e.structure.n))


def structure_distance_equal(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Mean sub-RCG distance over all embedding pairs of two same-size structures."""
    if a.structure.n != b.structure.n:
        raise ValueError("structures differ in size")
    if not len(a) or not len(b):
        raise ValueError("empty embedding set")
    fa = a.features()                      # (p, k, D)
    fb = b.features()                      # (q, k, D)
    diff = fa[:, None, :, :] - fb[None, :, :, :]
    pair = (diff * diff).sum(axis=(2, 3)) / (2.0 * a.structure.n)
    return float(pair.mean())


def enumerate_substructures(small: Structure, large: Structure) -> list[Structure]:
    """Connected induced substructures of ``large`` with as many vertices as ``small``."""
    if small.n >= large.n:
        raise ValueError("small structure must have fewer vertices than large")
    return connected_induced_substructures(large, small.n)


def absent_distance(present: bool, present2: bool, p: float, p2: float) -> float:
    """Distance when at least one of the two embedding sets is empty."""
    if not present and not present2:
        return (1.0 - p) * (1.0 - p2)
    return p + p2 - 2.0 * p * p2


def structure_distance(s: Structure, s2: Structure, g: Rcg, g2: Rcg,
                       p: float, p2: float, cache: EmbeddingCache | None = None) -> float:
    """Structure distance of ``s`` in ``g`` against ``s2`` in ``g2``; symmetric, in [0, 1]."""
    if not (0.0 <= p <= 1.0 and 0.0 <= p2 <= 1.0):
        raise ValueError("supports must lie in [0, 1]")
    cache = cache if cache is not None else EmbeddingCache(max(s.n, s2.n))
    a = cache.embedding_set(s, g)
    b = cache.embedding_set(s2, g2)
    if not len(a) or not len(b):
        return absent_distance(bool(len(a)), bool(len(b)), p, p2)
    if s.n == s2.n:
        return p * p2 * structure_distance_equal(a, b)
    if s.n < s2.n:
        small, big, big_graph = a, s2, g2
    else:
        small, big, big_graph = b, s, g
    values = []
    for c in enumerate_substructures(small.structure, big):
        sub = cache.embedding_set(c, big_graph)
        if len(sub):
            values.append(structure_distance_equal(small, sub))
    if not values:
        return absent_distance(True, True, p, p2)
    return p * p2 * float(np.mean(values))


@dataclass(frozen=True)
class EmbeddingStats:
    """Per-graph summaries of one structure's embeddings over a list of graphs."""

    present: np.ndarray     # (n,) bool
    means: np.ndarray       # (n, k * D) mean feature per position, flattened
    sqnorm: np.ndarray      # (n,) sum over positions of mean squared norm


class DistanceEngine:
    """Block evaluation of ``structure_distance`` with memoised summaries."""

    def __init__(self, cache: EmbeddingCache | None = None):
        self.cache = cache if cache is not None else EmbeddingCache()
        self._lock = threading.Lock()
        self._summary: dict[tuple[str, int], tuple[bool, np.ndarray, float]] = {}
        self._subs: dict[tuple[str, str], list[Structure]] = {}

    def _summarise(self, s: Structure, g: Rcg) -> tuple[bool, np.ndarray, float]:
        key = (s.canon, id(g))
        hit = self._summary.get(key)
        if hit is not None:
            return hit
        es = self.cache.embedding_set(s, g)
        d = g.features.shape[1]
        if len(es):
            f = es.features()
            out = (True, f.mean(axis=0).ravel(), float((f * f).sum(axis=2).mean(axis=0).sum()))
        else:
            out = (False, np.zeros(s.n * d), 0.0)
        with self._lock:
            self._summary.setdefault(key, out)
        return out

    def stats(self, s: Structure, graphs: Sequence[Rcg]) -> EmbeddingStats:
        rows = [self._summarise(s, g) for g in graphs]
        return EmbeddingStats(
            np.array([r[0] for r in rows], dtype=bool),
            np.stack([r[1] for r in rows]),
            np.array([r[2] for r in rows]),
        )

    def substructures(self, small: Structure, large: Structure) -> list[Structure]:
        key = (small.canon, large.canon)
        if key not in self._subs:
            self._subs[key] = enumerate_substructures(small, large)
        return self._subs[key]

    @staticmethod
    def _equal_block(a: EmbeddingStats, b: EmbeddingStats, k: int) -> np.ndarray:
        block = a.sqnorm[:, None] + b.sqnorm[None, :] - 2.0 * (a.means @ b.means.T)
        return np.clip(block / (2.0 * k), 0.0, 1.0)

    def matrix(self, s: Structure, p: float, s2: Structure, p2: float,
               rows: Sequence[Rcg], cols: Sequence[Rcg]) -> np.ndarray:
        """``out[i, j] = structure_distance(s, s2, rows[i], cols[j], p, p2)``."""
        sa = self.stats(s, rows)
        sb = self.stats(s2, cols)
        both = sa.present[:, None] & sb.present[None, :]
        neither = ~sa.present[:, None] & ~sb.present[None, :]
        out = np.where(neither, (1.0 - p) * (1.0 - p2), p + p2 - 2.0 * p * p2)
        if not both.any():
            return out
        if s.n == s2.n:
            d = self._equal_block(sa, sb, s.n)
            return np.where(both, p * p2 * d, out)
        if s.n < s2.n:
            total, valid = self._substructure_block(sa, s, s2, cols, transpose=False)
        else:
            total, valid = self._substructure_block(sb, s2, s, rows, transpose=True)
        # pairs where no substructure occurs keep the fallback value already in ``out``
        ok = both & (valid > 0)
        mean = np.divide(total, valid, out=np.zeros_like(total), where=valid > 0)
        return np.where(ok, p * p2 * mean, out)

    def _substructure_block(self, small_stats: EmbeddingStats, small: Structure, large: Structure,
                            large_graphs: Sequence[Rcg], transpose: bool):
        """Sum and count of same-size substructure distances, oriented as ``rows x cols``."""
        total = None
        valid = None
        for c in self.substructures(small, large):
            cs = self.stats(c, large_graphs)
            d = self._equal_block(small_stats, cs, small.n)
            m = np.broadcast_to(cs.present[None, :], d.shape)
            if transpose:
                d, m = d.T, m.T
            d = np.where(m, d, 0.0)
            total = d if total is None else total + d
            valid = m.astype(np.int64) if valid is None else valid + m
        return total, valid

    def distance(self, s: Structure, p: float, s2: Structure, p2: float, g: Rcg, g2: Rcg) -> float:
        return float(self.matrix(s, p, s2, p2, [g], [g2])[0, 0])

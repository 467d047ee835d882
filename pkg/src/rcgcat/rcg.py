"""Region connected graphs: one vertex per region, one edge per touching pair."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .imageio import Image
from .segment import RegionMap, _adjacent_pairs

VALID_BINS = (2, 4, 8, 16)


def region_histogram(image: Image, pixels: np.ndarray, bins_per_channel: int = 4) -> np.ndarray:
    """L1-normalised joint RGB histogram of ``bins_per_channel ** 3`` bins.

    ``pixels`` is an ``(m, 2)`` array of ``(row, col)`` coordinates. Channel
    value ``c`` falls in bin ``c * b // 256``; the joint index is
    ``r * b**2 + g * b + blue``.
    """
    b = bins_per_channel
    if b not in VALID_BINS:
        raise ValueError(f"bins_per_channel must be one of {VALID_BINS}, got {b}")
    pixels = np.asarray(pixels).reshape(-1, 2)
    if len(pixels) == 0:
        raise ValueError("empty region")
    rgb = image.pixels[pixels[:, 0], pixels[:, 1]].astype(np.int64)
    q = rgb * b // 256
    idx = q[:, 0] * b * b + q[:, 1] * b + q[:, 2]
    return np.bincount(idx, minlength=b ** 3) / len(pixels)


@dataclass(frozen=True, eq=False)
class Rcg:
    """Undirected graph with a feature vector per vertex.

    ``features`` has shape ``(|V|, D)``; ``edges`` is a sorted tuple of
    ``(i, j)`` pairs with ``i < j``.
    """

    features: np.ndarray
    edges: tuple[tuple[int, int], ...]
    source: str | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or len(feats) < 1:
            raise ValueError("an RCG needs at least one vertex with a feature vector")
        n = len(feats)
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range")
            norm.add((min(u, v), max(u, v)))
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "_adj", tuple(frozenset(a) for a in adj))

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        return self._adj

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def to_dict(self) -> dict:
        return {
            "vertices": self.features.tolist(),
            "edges": [list(e) for e in self.edges],
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Rcg":
        return cls(np.asarray(d["vertices"], dtype=np.float64),
                   tuple(tuple(e) for e in d["edges"]), d.get("source"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_rcg(image: Image, region_map: RegionMap, bins_per_channel: int = 4,
              source: str | None = None) -> Rcg:
    if region_map.region_ids.shape != (image.height, image.width):
        raise ValueError("region map does not match image dimensions")
    feats = np.stack([region_histogram(image, px, bins_per_channel)
                      for px in region_map.region_pixels()])
    pairs = _adjacent_pairs(region_map.region_ids)
    return Rcg(feats, tuple((int(a), int(b)) for a, b in pairs), source)


def degree_stats(g: Rcg) -> dict:
    deg = [g.degree(v) for v in range(g.n)]
    return {"max_degree": max(deg), "mean_degree": sum(deg) / g.n}

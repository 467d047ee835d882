"""Image decomposition into singly connected regions.

Pixels are first clustered by colour with fuzzy c-means, then split into
4-connected regions so that two spatially separated patches of one colour
cluster become separate regions.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import InvariantError
from .imageio import Image

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


@dataclass(eq=False)
class ClusterMap:
    labels: np.ndarray          # (height, width) int, values in [0, k)
    centroids: np.ndarray       # (k, 3) float
    fuzziness: float
    objective: list[float] = field(default_factory=list)
    iterations: int = 0

    @property
    def k(self) -> int:
        return len(self.centroids)


@dataclass(eq=False)
class RegionMap:
    region_ids: np.ndarray      # (height, width) int, values in [0, K)

    @property
    def count(self) -> int:
        return int(self.region_ids.max()) + 1

    @property
    def width(self) -> int:
        return self.region_ids.shape[1]

    @property
    def height(self) -> int:
        return self.region_ids.shape[0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.region_ids.ravel(), minlength=self.count)

    def region_pixels(self) -> list[np.ndarray]:
        """Per region, an ``(m, 2)`` array of ``(row, col)`` coordinates in raster order."""
        flat = self.region_ids.ravel()
        order = np.argsort(flat, kind="stable")
        bounds = np.cumsum(np.bincount(flat, minlength=self.count))[:-1]
        width = self.width
        return [np.stack(divmod(chunk, width), axis=1) for chunk in np.split(order, bounds)]

    def to_json(self) -> str:
        return json.dumps({
            "width": self.width,
            "height": self.height,
            "K": self.count,
            "region_ids": self.region_ids.ravel().tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "RegionMap":
        d = json.loads(text)
        ids = np.asarray(d["region_ids"], dtype=np.int64).reshape(d["height"], d["width"])
        rm = cls(ids)
        if rm.count != d["K"]:
            raise ValueError("region count does not match region_ids")
        return rm

    def to_image(self) -> Image:
        """Grayscale rendering with regions spread evenly over 0..255."""
        k = self.count
        levels = np.zeros(k, dtype=np.uint8) if k == 1 else \
            np.round(np.arange(k) * 255.0 / (k - 1)).astype(np.uint8)
        gray = levels[self.region_ids]
        return Image(np.repeat(gray[:, :, None], 3, axis=2))


def _memberships(colors: np.ndarray, centroids: np.ndarray, m: float) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((colors[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    zero = d2 == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = d2 ** (-1.0 / (m - 1.0))
        u = inv / inv.sum(axis=1, keepdims=True)
    hit = zero.any(axis=1)
    if hit.any():
        # a colour sitting exactly on a centroid belongs to it entirely
        z = zero[hit].astype(float)
        u[hit] = z / z.sum(axis=1, keepdims=True)
    return u, d2


def fuzzy_cmeans(image: Image, k: int = 6, fuzziness: float = 2.0, tol: float = 1e-3,
                 max_iter: int = 300, seed: int = 0) -> ClusterMap:
    """Fuzzy c-means over RGB values.

    Runs on the distinct colours weighted by pixel count, which is the same
    objective as running on every pixel. Centroids start at ``k`` distinct
    colours drawn with a seeded generator. Stops when no centroid moves by
    ``tol`` or more, or after ``max_iter`` rounds.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if fuzziness <= 1.0:
        raise ValueError("fuzziness must be > 1")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    flat = image.pixels.reshape(-1, 3)
    colors, inverse, counts = np.unique(flat, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    colors = colors.astype(np.float64)
    weights = counts.astype(np.float64)
    if k > len(colors):
        warnings.warn(f"k={k} exceeds the {len(colors)} distinct colours; using k={len(colors)}",
                      RuntimeWarning, stacklevel=2)
        k = len(colors)
    rng = np.random.default_rng(seed)
    centroids = colors[np.sort(rng.choice(len(colors), size=k, replace=False))].copy()
    m = float(fuzziness)
    objective = []
    it = 0
    for it in range(1, max_iter + 1):
        u, _ = _memberships(colors, centroids, m)
        um = (u ** m) * weights[:, None]
        new = (um.T @ colors) / um.sum(axis=0)[:, None]
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        d2 = ((colors[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        objective.append(float((um * d2).sum()))
        if shift < tol:
            break
    u, _ = _memberships(colors, centroids, m)
    # argmax returns the first maximum, i.e. the lowest cluster index on ties
    labels = np.argmax(u, axis=1)[inverse].reshape(image.height, image.width)
    return ClusterMap(labels, centroids, m, objective, it)


def _raster_renumber(ids: np.ndarray) -> np.ndarray:
    """Relabel so ids appear as 0, 1, 2, ... in first-encounter raster order."""
    flat = ids.ravel()
    _, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.ravel()].reshape(ids.shape)


def region_grow(labels: ClusterMap | np.ndarray) -> RegionMap:
    """Split a cluster label image into its 4-connected components."""
    lab = labels.labels if isinstance(labels, ClusterMap) else np.asarray(labels)
    out = np.empty(lab.shape, dtype=np.int64)
    offset = 0
    for value in np.unique(lab):
        comp, n = ndimage.label(lab == value, structure=_FOUR_CONNECTED)
        mask = comp > 0
        out[mask] = comp[mask] - 1 + offset
        offset += n
    return RegionMap(_raster_renumber(out))


def _adjacent_pairs(ids: np.ndarray) -> np.ndarray:
    """Unique unordered pairs ``(a, b)``, ``a < b``, of 4-adjacent distinct ids."""
    h = np.stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()], axis=1)
    v = np.stack([ids[:-1, :].ravel(), ids[1:, :].ravel()], axis=1)
    pairs = np.concatenate([h, v])
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs.sort(axis=1)
    return np.unique(pairs, axis=0) if len(pairs) else pairs.reshape(0, 2)


def merge_small_regions(region_map: RegionMap, min_pixels: int) -> RegionMap:
    """Fold every region under ``min_pixels`` into its largest 4-adjacent neighbour.

    The smallest region is processed first (ties by id); neighbour ties go to
    the lower id. Repeats until no small region remains or one region is left.
    """
    ids = region_map.region_ids
    k = region_map.count
    if min_pixels <= 1 or k == 1:
        return RegionMap(ids.copy())
    sizes = region_map.sizes().astype(np.int64)
    neighbours: list[set[int]] = [set() for _ in range(k)]
    for a, b in _adjacent_pairs(ids):
        neighbours[a].add(int(b))
        neighbours[b].add(int(a))
    parent = np.arange(k)
    alive = set(range(k))
    while len(alive) > 1:
        small = [r for r in alive if sizes[r] < min_pixels]
        if not small:
            break
        r = min(small, key=lambda x: (sizes[x], x))
        if not neighbours[r]:
            raise InvariantError(f"region {r} has no neighbours")
        target = max(neighbours[r], key=lambda x: (sizes[x], -x))
        parent[r] = target
        sizes[target] += sizes[r]
        for nb in neighbours[r]:
            neighbours[nb].discard(r)
            if nb != target:
                neighbours[nb].add(target)
                neighbours[target].add(nb)
        neighbours[r].clear()
        alive.discard(r)
    # resolve merge chains
    for r in range(k):
        root = r
        while parent[root] != root:
            root = parent[root]
        parent[r] = root
    return RegionMap(_raster_renumber(parent[ids]))


def segment_image(image: Image, k: int = 6, fuzziness: float = 2.0, tol: float = 1e-3,
                  max_iter: int = 300, min_pixels: int = 16, seed: int = 0) -> RegionMap:
    clusters = fuzzy_cmeans(image, k=k, fuzziness=fuzziness, tol=tol, max_iter=max_iter, seed=seed)
    return merge_small_regions(region_grow(clusters), min_pixels)

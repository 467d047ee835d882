"""Procedural labelled image sets whose classes differ in region layout.

Generator config (JSON)::

    {
      "classes": [{"name": "grid", "motif": "grid", "palette": [[r, g, b], ...]}, ...],
      "count": 20,            # images per class
      "size": 64,             # or [width, height]
      "noise": 0.0,           # std-dev of per-pixel Gaussian noise
      "jitter": 12,           # max per-part shift of each palette colour
      "seed": 7
    }

``palette`` is optional; each motif has a default. Motifs:

* ``grid``: a checkerboard of rectangular tiles (grid-graph RCG)
* ``rings``: concentric square rings (path RCG)
* ``stripes``: vertical bands of random widths (path RCG)
* ``blobs``: separated squares on a background (star RCG)
* ``single``: one centred square on a background (two regions)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .imageio import Dataset, Image, split_dataset, write_ppm

DEFAULT_PALETTES = {
    "grid": [[200, 60, 50], [240, 200, 80], [120, 40, 30]],
    "rings": [[40, 90, 200], [150, 200, 250], [20, 40, 110]],
    "stripes": [[60, 170, 80], [190, 240, 150], [20, 90, 40]],
    "blobs": [[110, 110, 110], [230, 120, 200], [90, 20, 120]],
    "single": [[0, 0, 0], [255, 255, 255]],
}


@dataclass
class ClassSpec:
    name: str
    motif: str
    palette: list[list[int]] | None = None

    def colors(self) -> np.ndarray:
        pal = self.palette if self.palette is not None else DEFAULT_PALETTES[self.motif]
        return np.asarray(pal, dtype=np.float64)


@dataclass
class SynthConfig:
    classes: list[ClassSpec]
    count: int = 20
    width: int = 64
    height: int = 64
    noise: float = 0.0
    jitter: int = 12
    seed: int = 7

    def __post_init__(self):
        if not self.classes:
            raise DataError("generator config has zero classes")
        if self.count < 1:
            raise DataError("generator config has zero images per class")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise DataError("duplicate class names")
        for c in self.classes:
            if c.motif not in MOTIFS:
                raise DataError(f"unknown motif {c.motif!r}; choose from {sorted(MOTIFS)}")
            if len(c.colors()) < 2:
                raise DataError(f"class {c.name}: palette needs at least two colours")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        size = d.get("size", 64)
        w, h = (size, size) if isinstance(size, int) else size
        classes = [ClassSpec(c["name"], c.get("motif", c["name"]), c.get("palette"))
                   for c in d.get("classes", [])]
        return cls(classes, int(d.get("count", 20)), int(w), int(h), float(d.get("noise", 0.0)),
                   int(d.get("jitter", 12)), int(d.get("seed", 7)))

    def to_dict(self) -> dict:
        return {
            "classes": [{"name": c.name, "motif": c.motif, "palette": c.colors().astype(int).tolist()}
                        for c in self.classes],
            "count": self.count,
            "size": [self.width, self.height],
            "noise": self.noise,
            "jitter": self.jitter,
            "seed": self.seed,
        }


def _cuts(rng, length: int, parts: int) -> np.ndarray:
    """Interior boundaries of ``parts`` roughly equal spans, each shifted by up to a quarter span."""
    span = length / parts
    base = np.arange(1, parts) * span
    return np.rint(base + rng.uniform(-span / 4, span / 4, size=parts - 1)).astype(int)


# Each motif returns ``(parts, colour)``: a map of part ids and, per part, a
# palette index. Parts are the connected pieces a perfect segmentation finds.

def _grid(rng, h, w, pal):
    rows, cols = (int(v) for v in rng.integers(3, 6, size=2))
    ri = np.searchsorted(_cuts(rng, h, rows), np.arange(h), side="right")
    ci = np.searchsorted(_cuts(rng, w, cols), np.arange(w), side="right")
    parts = ri[:, None] * cols + ci[None, :]
    r, c = np.divmod(np.arange(rows * cols), cols)
    colour = (r + c) % 2
    # a third colour on some dark tiles keeps layouts from being pure two-tone
    colour[(colour == 1) & (rng.random(rows * cols) < 0.3)] = 2 % len(pal)
    return parts, colour


def _rings(rng, h, w, pal):
    count = int(rng.integers(4, 8))
    cy, cx = h / 2 + rng.uniform(-4, 4), w / 2 + rng.uniform(-4, 4)
    yy, xx = np.mgrid[0:h, 0:w]
    cheb = np.maximum(np.abs(yy - cy) / (h / 2), np.abs(xx - cx) / (w / 2))
    parts = np.searchsorted(np.sort(rng.uniform(0.15, 0.95, size=count - 1)), cheb)
    colour = (np.arange(count) + int(rng.integers(0, 2))) % 2
    colour[(colour == 1) & (rng.random(count) < 0.3)] = 2 % len(pal)
    return parts, colour


def _stripes(rng, h, w, pal):
    count = int(rng.integers(4, 8))
    band = np.searchsorted(_cuts(rng, w, count), np.arange(w), side="right")
    colour = np.arange(count) % 2
    colour[(colour == 1) & (rng.random(count) < 0.3)] = 2 % len(pal)
    return np.broadcast_to(band[None, :], (h, w)).copy(), colour


def _blobs(rng, h, w, pal):
    parts = np.zeros((h, w), dtype=np.int64)
    taken = np.zeros((h, w), dtype=bool)
    want = int(rng.integers(4, 9))
    placed = 0
    for _ in range(200):
        if placed == want:
            break
        s = int(rng.integers(7, 13))
        y, x = int(rng.integers(2, h - s - 1)), int(rng.integers(2, w - s - 1))
        # keep a background gap around each square so squares never touch
        if taken[max(0, y - 2):y + s + 2, max(0, x - 2):x + s + 2].any():
            continue
        taken[y:y + s, x:x + s] = True
        placed += 1
        parts[y:y + s, x:x + s] = placed
    colour = np.zeros(placed + 1, dtype=np.int64)
    colour[1:] = 1 + np.arange(placed) % (len(pal) - 1)
    return parts, colour


def _single(rng, h, w, pal):
    parts = np.zeros((h, w), dtype=np.int64)
    s = max(1, min(h, w) // 2)
    y, x = (h - s) // 2, (w - s) // 2
    parts[y:y + s, x:x + s] = 1
    return parts, np.array([0, 1])


MOTIFS = {"grid": _grid, "rings": _rings, "stripes": _stripes, "blobs": _blobs, "single": _single}


def render(spec: ClassSpec, rng: np.random.Generator, width: int, height: int,
           noise: float, jitter: int) -> Image:
    """One image: palette colour per part, shifted per part by up to ``jitter``, plus pixel noise."""
    pal = spec.colors()
    parts, colour = MOTIFS[spec.motif](rng, height, width, pal)
    part_rgb = pal[colour]
    if jitter:
        part_rgb = part_rgb + rng.integers(-jitter, jitter + 1, size=part_rgb.shape)
    img = part_rgb[parts]
    if noise > 0:
        img = img + rng.normal(0.0, noise, size=img.shape)
    return Image(np.clip(np.rint(img), 0, 255).astype(np.uint8))


def generate(config: SynthConfig) -> dict[str, list[Image]]:
    """Images per class, fully determined by ``config``."""
    out = {}
    for ci, spec in enumerate(config.classes):
        rng = np.random.default_rng([config.seed, ci])
        out[spec.name] = [render(spec, rng, config.width, config.height, config.noise, config.jitter)
                          for _ in range(config.count)]
    return out


def _write_tree(root: Path, items: list[tuple[str, str, Image]]):
    for label, fname, img in items:
        d = root / label
        d.mkdir(parents=True, exist_ok=True)
        write_ppm(img, d / fname)


def synth_dataset(config: SynthConfig | dict, root: str | os.PathLike,
                  holdout: float | None = None) -> Dataset | tuple[Dataset, Dataset]:
    """Write the generated images under ``root/<class>/``.

    With ``holdout`` set, a stratified split is written to ``root/train`` and
    ``root/test`` instead, ``holdout`` being the test fraction.
    """
    if isinstance(config, dict):
        config = SynthConfig.from_dict(config)
    root = Path(root)
    images = generate(config)
    items = [(label, f"{label}_{i:03d}.ppm", img)
             for label, imgs in images.items() for i, img in enumerate(imgs)]
    classes = sorted(images)
    if holdout is None:
        _write_tree(root, items)
        return Dataset(sorted((root / lab / f, lab) for lab, f, _ in items), classes)
    lookup = {(lab, f): img for lab, f, img in items}
    full = Dataset(sorted((Path(lab) / f, lab) for lab, f, _ in items), classes)
    train, test = split_dataset(full, 1.0 - holdout, seed=config.seed)
    parts = []
    for sub, part in (("train", train), ("test", test)):
        base = root / sub
        _write_tree(base, [(lab, p.name, lookup[(lab, p.name)]) for p, lab in part.items])
        parts.append(Dataset([(base / p, lab) for p, lab in part.items], classes))
    return parts[0], parts[1]


def load_config(path: str | os.PathLike) -> SynthConfig:
    try:
        return SynthConfig.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"bad generator config {path}: {exc}") from None


def default_config(names: list[str] | None = None, count: int = 20, size: int = 64,
                   seed: int = 7) -> SynthConfig:
    names = names or ["blobs", "grid", "rings"]
    return SynthConfig([ClassSpec(n, n) for n in names], count, size, size, seed=seed)

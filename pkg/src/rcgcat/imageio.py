"""Raster I/O and on-disk dataset layout.

Datasets live at ``<root>/<class-name>/<image>.ppm``. PPM (P3/P6, maxval
255) is the bit-exact format; PNG is read through Pillow when installed.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

IMAGE_SUFFIXES = (".ppm", ".pnm", ".png")


@dataclass(frozen=True, eq=False)
class Image:
    """RGB image; ``pixels`` has shape ``(height, width, 3)`` and dtype uint8."""

    pixels: np.ndarray
    name: str = ""

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise DataError(f"expected (height, width, 3) pixels, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DataError("image must be at least 1x1")
        if px.dtype != np.uint8:
            if px.min() < 0 or px.max() > 255:
                raise DataError("channel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)


def _ppm_tokens(data: bytes, count: int, start: int = 0) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    tokens = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        if i >= n:
            raise DataError("malformed header: unexpected end of file")
        j = i
        while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
            j += 1
        tokens.append(data[i:j])
        i = j
    return tokens, i


def decode_ppm(data: bytes, name: str = "") -> Image:
    magic, pos = _ppm_tokens(data, 1)
    if magic[0] not in (b"P3", b"P6"):
        raise DataError(f"unsupported format: magic {magic[0]!r}")
    try:
        head, pos = _ppm_tokens(data, 3, pos)
        width, height, maxval = (int(t) for t in head)
    except ValueError as exc:
        raise DataError(f"malformed header: {exc}") from None
    if width < 1 or height < 1:
        raise DataError(f"malformed header: size {width}x{height}")
    if maxval != 255:
        raise DataError(f"unsupported maxval {maxval} (only 255)")
    count = width * height * 3
    if magic[0] == b"P6":
        # exactly one whitespace byte separates the header from the raster
        body = data[pos + 1:pos + 1 + count]
        if len(body) != count:
            raise DataError(f"truncated raster: expected {count} bytes, got {len(body)}")
        arr = np.frombuffer(body, dtype=np.uint8)
    else:
        try:
            values = [int(t) for t in data[pos:].split()[:count]]
        except ValueError:
            raise DataError("malformed P3 raster") from None
        if len(values) != count:
            raise DataError(f"truncated raster: expected {count} values, got {len(values)}")
        arr = np.asarray(values)
        if arr.min() < 0 or arr.max() > 255:
            raise DataError("P3 sample out of range")
        arr = arr.astype(np.uint8)
    return Image(arr.reshape(height, width, 3).copy(), name=name)


def encode_ppm(image: Image) -> bytes:
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def write_ppm(image: Image, path: str | os.PathLike) -> None:
    Path(path).write_bytes(encode_ppm(image))


def load_image(path: str | os.PathLike) -> Image:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    if data[:2] in (b"P3", b"P6"):
        return decode_ppm(data, name=str(path))
    raise DataError(f"unsupported format: {path}")


def _load_png(path: Path) -> Image:
    try:
        from PIL import Image as PILImage
    except ImportError:
        raise DataError(f"PNG support needs Pillow: {path}") from None
    try:
        with PILImage.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise DataError(f"cannot decode {path}: {exc}") from None
    return Image(arr.copy(), name=str(path))


@dataclass
class Dataset:
    """Labelled image references with an ordered class list."""

    items: list[tuple[Path, str]]
    classes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.classes:
            self.classes = sorted({label for _, label in self.items})
        if not self.classes:
            raise DataError("dataset has no classes")
        if len(set(self.classes)) != len(self.classes):
            raise DataError("duplicate class labels")
        known = set(self.classes)
        for path, label in self.items:
            if label not in known:
                raise DataError(f"{path}: label {label!r} not in class list")

    def __len__(self):
        return len(self.items)

    @property
    def labels(self) -> list[str]:
        return [label for _, label in self.items]

    @property
    def paths(self) -> list[Path]:
        return [p for p, _ in self.items]


def scan_dataset(root: str | os.PathLike) -> Dataset:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith("."))
    if not class_dirs:
        raise DataError(f"dataset root {root} has no class directories")
    items = []
    for cdir in class_dirs:
        images = sorted(
            p for p in cdir.iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not images:
            raise DataError(f"class directory {cdir} contains no images")
        items.extend((p, cdir.name) for p in images)
    return Dataset(items, [c.name for c in class_dirs])


def split_dataset(dataset: Dataset, train_fraction: float = 0.5,
                  seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified split; every class keeps at least one item on each side when possible."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    rng = random.Random(seed)
    train, test = [], []
    for label in dataset.classes:
        members = [it for it in dataset.items if it[1] == label]
        rng.shuffle(members)
        k = round(len(members) * train_fraction)
        if len(members) >= 2:
            k = min(max(k, 1), len(members) - 1)
        train.extend(sorted(members[:k]))
        test.extend(sorted(members[k:]))
    return Dataset(train, list(dataset.classes)), Dataset(test, list(dataset.classes))

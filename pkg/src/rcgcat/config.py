"""Pipeline configuration, stored as JSON with every field spelled out."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .canon import MAX_CANON_SIZE
from .errors import DataError
from .rcg import VALID_BINS
from .refine import MSC_REMOVAL


@dataclass
class SegmentationConfig:
    k: int = 6
    fuzziness: float = 2.0
    tol: float = 1e-3
    max_iter: int = 300
    min_pixels: int = 16
    seed: int = 0


@dataclass
class FeatureConfig:
    bins_per_channel: int = 4


@dataclass
class MiningConfig:
    min_support: float = 0.2
    max_structure_size: int = MAX_CANON_SIZE


@dataclass
class RefinementConfig:
    delta_sd: float = 0.1
    delta_sc: float = 0.65
    msc_removal: str = "above"


@dataclass
class QuantizationConfig:
    lam: float = 0.5


@dataclass
class SvmConfig:
    C: float = 1.0
    epochs: int = 200
    seed: int = 0


@dataclass
class PipelineConfig:
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    mining: MiningConfig = field(default_factory=MiningConfig)
    refinement: RefinementConfig = field(default_factory=RefinementConfig)
    quantization: QuantizationConfig = field(default_factory=QuantizationConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        sections = {}
        for f in dataclasses.fields(cls):
            sub_cls = f.default_factory
            raw = d.get(f.name, {}) or {}
            known = {x.name for x in dataclasses.fields(sub_cls)}
            extra = set(raw) - known
            if extra:
                raise DataError(f"unknown keys in config section {f.name!r}: {sorted(extra)}")
            sections[f.name] = sub_cls(**raw)
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise DataError(f"unknown config sections: {sorted(unknown)}")
        cfg = cls(**sections)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike) -> "PipelineConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except OSError as exc:
            raise DataError(f"cannot read config {path}: {exc.strerror or exc}") from None
        except (json.JSONDecodeError, TypeError) as exc:
            raise DataError(f"bad config {path}: {exc}") from None

    def with_seed(self, seed: int) -> "PipelineConfig":
        cfg = PipelineConfig.from_dict(self.to_dict())
        cfg.segmentation.seed = seed
        cfg.svm.seed = seed
        return cfg

    def validate(self) -> None:
        s = self.segmentation
        checks = [
            (s.k >= 1, "segmentation.k must be >= 1"),
            (s.fuzziness > 1.0, "segmentation.fuzziness must be > 1"),
            (s.tol > 0, "segmentation.tol must be > 0"),
            (s.max_iter >= 1, "segmentation.max_iter must be >= 1"),
            (s.min_pixels >= 1, "segmentation.min_pixels must be >= 1"),
            (self.features.bins_per_channel in VALID_BINS,
             f"features.bins_per_channel must be one of {VALID_BINS}"),
            (0.0 < self.mining.min_support <= 1.0, "mining.min_support must lie in (0, 1]"),
            (2 <= self.mining.max_structure_size <= MAX_CANON_SIZE,
             f"mining.max_structure_size must lie in [2, {MAX_CANON_SIZE}]"),
            (self.refinement.msc_removal in MSC_REMOVAL,
             f"refinement.msc_removal must be one of {MSC_REMOVAL}"),
            (self.quantization.lam > 0, "quantization.lam must be > 0"),
            (self.svm.C > 0, "svm.C must be > 0"),
            (self.svm.epochs >= 1, "svm.epochs must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DataError(msg)

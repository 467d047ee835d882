"""Structure scoring and selection.

MSD rates a structure by how much farther apart graphs of different classes
are than graphs of the same class (sums over unordered pairs of distinct
graphs). MSC compares two structures: the cross-structure distance summed
over all ordered graph pairs, normalised by the two self-structure sums.

Selection keeps structures whose MSD clears ``delta_sd``, orders them by
decreasing MSD, then walks the list greedily: the head is selected and every
later structure whose MSC against it trips the ``delta_sc`` rule is dropped.
The default rule (``msc_removal="above"``) drops structures with MSC above
the threshold; ``"below"`` drops those under it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from .gdist import DistanceEngine
from .rcg import Rcg
from .structmine import MinedStructure

MSD_MAX = math.inf
MSC_REMOVAL = ("above", "below")


@dataclass
class LabeledCorpus:
    rcgs: list[Rcg]
    labels: list[str]
    engine: DistanceEngine = field(default_factory=DistanceEngine, repr=False)

    def __post_init__(self):
        if len(self.rcgs) != len(self.labels):
            raise ValueError("rcgs and labels differ in length")

    def __len__(self):
        return len(self.rcgs)

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels))


@dataclass(frozen=True)
class ScoredStructure:
    structure: MinedStructure
    msd: float
    rank: int | None = None

    @property
    def canon(self) -> str:
        return self.structure.canon

    def to_dict(self) -> dict:
        d = self.structure.to_dict()
        d["msd"] = "MAX" if math.isinf(self.msd) else self.msd
        d["rank"] = self.rank
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScoredStructure":
        msd = MSD_MAX if d["msd"] == "MAX" else float(d["msd"])
        return cls(MinedStructure.from_dict(d), msd, d.get("rank"))


def self_matrix(s: MinedStructure, corpus: LabeledCorpus) -> np.ndarray:
    return corpus.engine.matrix(s.structure, s.support, s.structure, s.support,
                                corpus.rcgs, corpus.rcgs)


def msd_from_matrix(dist: np.ndarray, labels: Sequence[Hashable]) -> float:
    labels = np.asarray(labels)
    if len(set(labels.tolist())) < 2:
        raise ValueError("MSD needs at least two classes")
    iu = np.triu_indices(len(labels), k=1)
    same = (labels[:, None] == labels[None, :])[iu]
    values = dist[iu]
    between = float(values[~same].sum())
    within = float(values[same].sum())
    if within == 0.0:
        return MSD_MAX if between > 0.0 else 0.0
    return between / within


def msd(s: MinedStructure, corpus: LabeledCorpus) -> float:
    return msd_from_matrix(self_matrix(s, corpus), corpus.labels)


def msc_from_sums(cross: float, self_a: float, self_b: float) -> float:
    denom = self_a + self_b
    if denom == 0.0:
        return 0.5
    return cross / denom


def msc(s: MinedStructure, s2: MinedStructure, corpus: LabeledCorpus) -> float:
    cross = corpus.engine.matrix(s.structure, s.support, s2.structure, s2.support,
                                 corpus.rcgs, corpus.rcgs).sum()
    return msc_from_sums(float(cross), float(self_matrix(s, corpus).sum()),
                         float(self_matrix(s2, corpus).sum()))


def _removes(value: float, delta_sc: float, msc_removal: str) -> bool:
    if msc_removal == "above":
        return value > delta_sc
    return value < delta_sc


def select(ordered: Sequence, msc_fn: Callable[[object, object], float],
           delta_sc: float, msc_removal: str = "above") -> list:
    """Greedy redundancy pruning over an already MSD-ordered list."""
    if msc_removal not in MSC_REMOVAL:
        raise ValueError(f"msc_removal must be one of {MSC_REMOVAL}")
    remaining = list(ordered)
    chosen = []
    while remaining:
        head = remaining.pop(0)
        remaining = [s for s in remaining if not _removes(msc_fn(head, s), delta_sc, msc_removal)]
        chosen.append(head)
    return chosen


def rank_by_msd(scored: Sequence[ScoredStructure], delta_sd: float) -> list[ScoredStructure]:
    kept = [s for s in scored if s.msd > delta_sd]
    return sorted(kept, key=lambda s: (-s.msd, s.canon))


class _MscTable:
    """MSC with each structure's self-sum computed once."""

    def __init__(self, corpus: LabeledCorpus):
        self.corpus = corpus
        self.self_sums: dict[str, float] = {}

    def self_sum(self, s: MinedStructure) -> float:
        if s.canon not in self.self_sums:
            self.self_sums[s.canon] = float(self_matrix(s, self.corpus).sum())
        return self.self_sums[s.canon]

    def __call__(self, a: ScoredStructure, b: ScoredStructure) -> float:
        sa, sb = a.structure, b.structure
        cross = self.corpus.engine.matrix(sa.structure, sa.support, sb.structure, sb.support,
                                          self.corpus.rcgs, self.corpus.rcgs).sum()
        return msc_from_sums(float(cross), self.self_sum(sa), self.self_sum(sb))


def refine_structures(candidates: Sequence[MinedStructure], corpus: LabeledCorpus,
                      delta_sd: float = 0.1, delta_sc: float = 0.65,
                      msc_removal: str = "above") -> list[ScoredStructure]:
    """Selected structures in selection order, each with its MSD and rank."""
    if msc_removal not in MSC_REMOVAL:
        raise ValueError(f"msc_removal must be one of {MSC_REMOVAL}")
    table = _MscTable(corpus)
    scored = []
    for c in candidates:
        dist = self_matrix(c, corpus)
        table.self_sums[c.canon] = float(dist.sum())
        scored.append(ScoredStructure(c, msd_from_matrix(dist, corpus.labels)))
    chosen = select(rank_by_msd(scored, delta_sd), table, delta_sc, msc_removal)
    return [ScoredStructure(s.structure, s.msd, i) for i, s in enumerate(chosen)]


def dump_refined(refined: Sequence[ScoredStructure]) -> str:
    return json.dumps([r.to_dict() for r in refined], indent=1)


def load_refined(text: str) -> list[ScoredStructure]:
    return [ScoredStructure.from_dict(d) for d in json.loads(text)]

"""Fixed-length encoding of an image against the training graphs.

Entry ``i`` decays exponentially with the total structure distance (summed
over the selected structures) between the image's RCG and training graph
``i``; the vector is then L1-normalised.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Sequence

import numpy as np

from .gdist import DistanceEngine
from .rcg import Rcg
from .structmine import MinedStructure

DEFAULT_LAMBDA = 0.5


def _check(refined: Sequence[MinedStructure], training: Sequence[Rcg], lam: float):
    if not refined:
        raise ValueError("empty refined structure set")
    if not training:
        raise ValueError("empty training corpus")
    if lam <= 0:
        raise ValueError("lambda must be > 0")


def total_distances(graphs: Sequence[Rcg], training: Sequence[Rcg],
                    refined: Sequence[MinedStructure], engine: DistanceEngine) -> np.ndarray:
    """``out[i, j]`` = sum over structures of the distance between ``graphs[i]`` and ``training[j]``."""
    total = np.zeros((len(graphs), len(training)))
    for m in refined:
        total += engine.matrix(m.structure, m.support, m.structure, m.support, graphs, training)
    return total


def encode(totals: np.ndarray, lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Row-wise ``exp(-lam * total)``, L1-normalised."""
    totals = np.atleast_2d(totals)
    # shifting by the row minimum leaves the normalised result unchanged and avoids underflow
    raw = np.exp(-lam * (totals - totals.min(axis=1, keepdims=True)))
    return raw / raw.sum(axis=1, keepdims=True)


def quantize(g: Rcg, training: Sequence[Rcg], refined: Sequence[MinedStructure],
             lam: float = DEFAULT_LAMBDA, engine: DistanceEngine | None = None) -> np.ndarray:
    _check(refined, training, lam)
    engine = engine if engine is not None else DistanceEngine()
    return encode(total_distances([g], training, refined, engine), lam)[0]


def quantize_corpus(training: Sequence[Rcg], refined: Sequence[MinedStructure],
                    lam: float = DEFAULT_LAMBDA, engine: DistanceEngine | None = None) -> np.ndarray:
    """One row per training graph, each encoded against the whole training set."""
    _check(refined, training, lam)
    engine = engine if engine is not None else DistanceEngine()
    return encode(total_distances(training, training, refined, engine), lam)


def features_to_json(matrix: np.ndarray, row_ids: Sequence[str], col_ids: Sequence[str]) -> str:
    return json.dumps({"rows": list(row_ids), "columns": list(col_ids),
                       "values": np.asarray(matrix).tolist()}, indent=1)


def features_from_json(text: str) -> tuple[np.ndarray, list[str], list[str]]:
    d = json.loads(text)
    return np.asarray(d["values"], dtype=np.float64), d["rows"], d["columns"]


def features_to_csv(matrix: np.ndarray, row_ids: Sequence[str], col_ids: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["image", *col_ids])
    for rid, row in zip(row_ids, np.asarray(matrix)):
        w.writerow([rid, *(repr(float(x)) for x in row)])
    return buf.getvalue()

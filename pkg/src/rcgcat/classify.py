"""One-vs-rest soft-margin linear SVM trained by averaged stochastic subgradient descent.

Each binary problem minimises

    (lam / 2) * ||w||^2 + mean_i max(0, 1 - y_i * (w . x_i + b)),   lam = 1 / (C * n)

with step ``1 / (lam * t)`` (Pegasos schedule). The bias rides along as an
extra constant input and is regularised with the weights. The returned
weights are the average of all iterates. Inputs are standardised per
feature with statistics stored in the model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FORMAT_VERSION = 1


@dataclass
class SvmModel:
    classes: list[str]
    weights: np.ndarray         # (n_classes, d)
    biases: np.ndarray          # (n_classes,)
    mean: np.ndarray            # (d,)
    scale: np.ndarray           # (d,)
    config: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def scores(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ValueError(f"feature length {x.shape[-1]} does not match model dimension {self.dim}")
        z = (x - self.mean) / self.scale
        return z @ self.weights.T + self.biases

    def to_json(self) -> str:
        return json.dumps({
            "format_version": FORMAT_VERSION,
            "classes": self.classes,
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "scaler": {"mean": self.mean.tolist(), "scale": self.scale.tolist()},
            "config": self.config,
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "SvmModel":
        d = json.loads(text)
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format_version')!r}")
        return cls(list(d["classes"]), np.asarray(d["weights"], dtype=np.float64),
                   np.asarray(d["biases"], dtype=np.float64),
                   np.asarray(d["scaler"]["mean"], dtype=np.float64),
                   np.asarray(d["scaler"]["scale"], dtype=np.float64), d.get("config", {}))


def hinge_objective(w: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Regularised mean hinge loss; ``X`` already carries the bias column."""
    margins = y * (X @ w)
    return float(0.5 * lam * (w @ w) + np.maximum(0.0, 1.0 - margins).mean())


def _train_binary(X: np.ndarray, y: np.ndarray, C: float, epochs: int,
                  rng: np.random.Generator) -> tuple[np.ndarray, list[float]]:
    n, d = X.shape
    lam = 1.0 / (C * n)
    w = np.zeros(d)
    avg = np.zeros(d)
    t = 0
    history = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            violated = y[i] * (X[i] @ w) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w += eta * y[i] * X[i]
            avg += (w - avg) / t
        history.append(hinge_objective(avg, X, y, lam))
    return avg, history


def train(features: np.ndarray, labels: Sequence[str], C: float = 1.0, epochs: int = 200,
          seed: int = 0, classes: Sequence[str] | None = None) -> SvmModel:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if len(labels) != len(X):
        raise ValueError(f"{len(X)} feature rows but {len(labels)} labels")
    classes = list(classes) if classes is not None else sorted(set(labels))
    if len(set(labels)) < 2:
        raise ValueError("training needs at least two classes")
    unknown = set(labels) - set(classes)
    if unknown:
        raise ValueError(f"labels not in class list: {sorted(unknown)}")
    if C <= 0 or epochs < 1:
        raise ValueError("C must be > 0 and epochs >= 1")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    Z = np.hstack([(X - mean) / scale, np.ones((len(X), 1))])
    lab = np.asarray(labels)
    weights, biases, history = [], [], {}
    for ci, cls in enumerate(classes):
        y = np.where(lab == cls, 1.0, -1.0)
        rng = np.random.default_rng([seed, ci])
        w, hist = _train_binary(Z, y, C, epochs, rng)
        weights.append(w[:-1])
        biases.append(w[-1])
        history[cls] = hist
    return SvmModel(classes, np.array(weights), np.array(biases), mean, scale,
                    {"C": C, "epochs": epochs, "seed": seed}, history)


def predict(model: SvmModel, feature: np.ndarray) -> tuple[str, dict[str, float]]:
    """Highest-scoring class; ties go to the earlier class in ``model.classes``."""
    scores = model.scores(np.asarray(feature, dtype=np.float64).ravel())
    best = int(np.argmax(scores))
    return model.classes[best], {c: float(v) for c, v in zip(model.classes, scores)}


def predict_many(model: SvmModel, features: np.ndarray) -> list[str]:
    scores = model.scores(np.atleast_2d(features))
    return [model.classes[i] for i in np.argmax(scores, axis=1)]

"""Train/test orchestration with per-stage artifacts.

Training runs segment -> rcg -> mine -> refine -> quantize -> svm. Each stage
writes one JSON artifact; the manifest records, per stage, a key derived
from the inputs and the config sections the stage depends on, plus the
artifact's SHA-256. A rerun reuses any stage whose key and file hash still
match, so changing only late-stage settings (say the refinement thresholds)
skips segmentation and mining.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .classify import SvmModel, predict, predict_many, train
from .config import PipelineConfig
from .errors import DataError, RcgError, StageError
from .extract import EmbeddingCache
from .gdist import DistanceEngine
from .imageio import Dataset, load_image, split_dataset
from .quantize import encode, features_from_json, features_to_json, total_distances
from .rcg import Rcg, build_rcg
from .refine import LabeledCorpus, ScoredStructure, dump_refined, load_refined, refine_structures
from .segment import segment_image
from .structmine import MinedStructure, dump_mined, load_mined, mine_frequent

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
LOCK = ".lock"
ARTIFACTS = {
    "config": "config.json",
    "rcgs": "rcgs.json",
    "mined": "mined.json",
    "refined": "refined.json",
    "features": "features.json",
    "model": "model.json",
}


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _key(*parts) -> str:
    return sha256(json.dumps(parts, sort_keys=True).encode())


def image_to_rcg(path: str | os.PathLike, config: PipelineConfig, source: str | None = None) -> Rcg:
    img = load_image(path)
    seg = config.segmentation
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        regions = segment_image(img, k=seg.k, fuzziness=seg.fuzziness, tol=seg.tol,
                                max_iter=seg.max_iter, min_pixels=seg.min_pixels, seed=seg.seed)
    for w in caught:
        log.debug("%s: %s", path, w.message)
    return build_rcg(img, regions, config.features.bins_per_channel,
                     source=source if source is not None else str(path))


def _rcg_job(args):
    path, config_dict, source = args
    return image_to_rcg(path, PipelineConfig.from_dict(config_dict), source)


def dataset_ids(dataset: Dataset) -> list[str]:
    return [f"{label}/{Path(p).name}" for p, label in dataset.items]


def build_rcgs(paths: Sequence[Path], ids: Sequence[str], config: PipelineConfig,
               jobs: int = 1) -> list[Rcg]:
    """RCGs for many images; ``jobs > 1`` fans out over processes with identical results."""
    if jobs > 1 and len(paths) > 1:
        cfg = config.to_dict()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_rcg_job, (p, cfg, i)) for p, i in zip(paths, ids)]
            out = []
            for p, fut in zip(paths, futures):
                try:
                    out.append(fut.result())
                except Exception as exc:
                    raise StageError("segment", str(exc), str(p)) from exc
            return out
    out = []
    for p, i in zip(paths, ids):
        try:
            out.append(image_to_rcg(p, config, i))
        except Exception as exc:
            raise StageError("segment", str(exc), str(p)) from exc
    return out


@dataclass
class TrainedModel:
    config: PipelineConfig
    train_ids: list[str]
    labels: list[str]
    rcgs: list[Rcg]
    mined: list[MinedStructure]
    refined: list[ScoredStructure]
    features: np.ndarray
    svm: SvmModel
    engine: DistanceEngine

    @property
    def structures(self) -> list[MinedStructure]:
        return [r.structure for r in self.refined]

    def encode(self, graphs: Sequence[Rcg]) -> np.ndarray:
        totals = total_distances(graphs, self.rcgs, self.structures, self.engine)
        return encode(totals, self.config.quantization.lam)

    def predict_rcg(self, g: Rcg) -> tuple[str, dict[str, float], np.ndarray]:
        vec = self.encode([g])[0]
        label, scores = predict(self.svm, vec)
        return label, scores, vec

    def predict_many(self, graphs: Sequence[Rcg]) -> list[str]:
        if not graphs:
            return []
        return predict_many(self.svm, self.encode(graphs))


class _Stages:
    """Reads and writes stage artifacts under an output directory (or nowhere)."""

    def __init__(self, out_dir: Path | None):
        self.out_dir = out_dir
        self.old: dict = {}
        self.new: dict = {}
        if out_dir is not None and (out_dir / MANIFEST).exists():
            try:
                self.old = json.loads((out_dir / MANIFEST).read_text()).get("stages", {})
            except (OSError, json.JSONDecodeError):
                self.old = {}

    def run(self, name: str, key: str, compute: Callable[[], object],
            dump: Callable[[object], str], load: Callable[[str], object]):
        path = self.out_dir / ARTIFACTS[name] if self.out_dir is not None else None
        rec = self.old.get(name)
        if path is not None and rec and rec.get("key") == key and path.exists():
            data = path.read_bytes()
            if sha256(data) == rec.get("sha256"):
                log.info("stage %s: reusing %s", name, path.name)
                self.new[name] = rec
                return load(data.decode())
        log.info("stage %s: computing", name)
        try:
            value = compute()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, str(exc)) from exc
        text = dump(value)
        if path is not None:
            path.write_text(text)
        self.new[name] = {"key": key, "sha256": sha256(text.encode()), "file": ARTIFACTS[name]}
        return value


def _dump_rcgs(items: tuple[list[str], list[str], list[Rcg]]) -> str:
    ids, labels, rcgs = items
    return json.dumps({"items": [{"id": i, "label": lab, "rcg": g.to_dict()}
                                 for i, lab, g in zip(ids, labels, rcgs)]})


def _load_rcgs(text: str) -> tuple[list[str], list[str], list[Rcg]]:
    d = json.loads(text)["items"]
    return [x["id"] for x in d], [x["label"] for x in d], [Rcg.from_dict(x["rcg"]) for x in d]


@contextlib.contextmanager
def _locked(out_dir: Path | None):
    if out_dir is None:
        yield
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise DataError(f"{out_dir} is locked by another run (remove {lock} if stale)") from None
    os.close(fd)
    try:
        yield
    finally:
        lock.unlink(missing_ok=True)


def train_pipeline(dataset: Dataset, config: PipelineConfig | None = None,
                   out_dir: str | os.PathLike | None = None, jobs: int = 1) -> TrainedModel:
    config = config or PipelineConfig()
    config.validate()
    out = Path(out_dir) if out_dir is not None else None
    if len(dataset.classes) < 2:
        raise DataError("training needs at least two classes")
    ids = dataset_ids(dataset)
    inputs = []
    for (path, label), i in zip(dataset.items, ids):
        try:
            digest = sha256(Path(path).read_bytes())
        except OSError as exc:
            raise StageError("segment", exc.strerror or str(exc), str(path)) from None
        inputs.append({"id": i, "label": label, "sha256": digest})
    cfg = config.to_dict()

    with _locked(out):
        stages = _Stages(out)
        stages.run("config", _key(cfg), lambda: config, lambda c: c.to_json(),
                   lambda t: PipelineConfig.from_dict(json.loads(t)))

        k_seg = _key(inputs, cfg["segmentation"], cfg["features"])
        ids, labels, rcgs = stages.run(
            "rcgs", k_seg,
            lambda: (ids, dataset.labels, build_rcgs(dataset.paths, ids, config, jobs)),
            _dump_rcgs, _load_rcgs)

        cache = EmbeddingCache(config.mining.max_structure_size)
        engine = DistanceEngine(cache)

        k_mine = _key(k_seg, cfg["mining"])
        mined = stages.run(
            "mined", k_mine,
            lambda: mine_frequent(rcgs, config.mining.min_support,
                                  config.mining.max_structure_size, cache),
            dump_mined, load_mined)

        def _refine():
            if not mined:
                raise StageError("refine", "no frequent structures were mined; lower mining.min_support")
            r = config.refinement
            chosen = refine_structures(mined, LabeledCorpus(rcgs, labels, engine),
                                       r.delta_sd, r.delta_sc, r.msc_removal)
            if not chosen:
                raise StageError("refine", "no structure passed refinement; lower refinement.delta_sd")
            return chosen

        k_ref = _key(k_mine, cfg["refinement"])
        refined = stages.run("refined", k_ref, _refine, dump_refined, load_refined)

        k_q = _key(k_ref, cfg["quantization"])

        def _quantize():
            structs = [r.structure for r in refined]
            return encode(total_distances(rcgs, rcgs, structs, engine), config.quantization.lam)

        features = stages.run(
            "features", k_q, _quantize,
            lambda m: features_to_json(m, ids, ids),
            lambda t: features_from_json(t)[0])

        k_svm = _key(k_q, cfg["svm"])
        s = config.svm
        model = stages.run(
            "model", k_svm,
            lambda: train(features, labels, C=s.C, epochs=s.epochs, seed=s.seed,
                          classes=dataset.classes),
            lambda m: m.to_json(), SvmModel.from_json)

        if out is not None:
            manifest = {
                "format_version": FORMAT_VERSION,
                "classes": list(dataset.classes),
                "inputs": inputs,
                "feature_dim": len(rcgs),
                "bins_per_channel": config.features.bins_per_channel,
                "stages": stages.new,
            }
            (out / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")

    return TrainedModel(config, ids, labels, rcgs, mined, refined, features, model, engine)


def load_trained(model_dir: str | os.PathLike) -> TrainedModel:
    d = Path(model_dir)
    try:
        manifest = json.loads((d / MANIFEST).read_text())
    except FileNotFoundError:
        raise DataError(f"{d} has no {MANIFEST}; run train first") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt manifest in {d}: {exc}") from None
    texts = {}
    for name, fname in ARTIFACTS.items():
        p = d / fname
        if not p.exists():
            raise DataError(f"missing artifact {p}")
        data = p.read_bytes()
        rec = manifest.get("stages", {}).get(name, {})
        if sha256(data) != rec.get("sha256"):
            raise DataError(f"artifact {p} does not match the manifest")
        texts[name] = data.decode()
    config = PipelineConfig.from_dict(json.loads(texts["config"]))
    ids, labels, rcgs = _load_rcgs(texts["rcgs"])
    refined = load_refined(texts["refined"])
    features = features_from_json(texts["features"])[0]
    svm = SvmModel.from_json(texts["model"])
    if svm.dim != len(rcgs) or manifest.get("feature_dim") != len(rcgs) or features.shape[1] != len(rcgs):
        raise DataError("feature dimension drift between model, training graphs and manifest")
    if config.features.bins_per_channel != manifest.get("bins_per_channel"):
        raise DataError("bins_per_channel in config.json disagrees with the manifest")
    engine = DistanceEngine(EmbeddingCache(config.mining.max_structure_size))
    return TrainedModel(config, ids, labels, rcgs, load_mined(texts["mined"]), refined,
                        features, svm, engine)


def check_compatible(trained: TrainedModel, config: PipelineConfig) -> None:
    """Reject a config whose image-processing settings differ from the trained model's."""
    mine, theirs = trained.config.to_dict(), config.to_dict()
    for section in ("segmentation", "features"):
        if mine[section] != theirs[section]:
            raise DataError(f"config section {section!r} differs from the trained model "
                            f"({theirs[section]} vs {mine[section]})")


def predict_image(trained: TrainedModel, path: str | os.PathLike) -> dict:
    try:
        g = image_to_rcg(path, trained.config)
    except RcgError:
        raise
    except Exception as exc:
        raise StageError("segment", str(exc), str(path)) from exc
    label, scores, vec = trained.predict_rcg(g)
    return {"label": label, "scores": scores, "features": vec.tolist()}


def evaluate(trained: TrainedModel, dataset: Dataset, jobs: int = 1) -> dict:
    unknown = sorted(set(dataset.classes) - set(trained.svm.classes))
    if unknown:
        raise DataError(f"dataset classes not known to the model: {unknown}")
    ids = dataset_ids(dataset)
    graphs = build_rcgs(dataset.paths, ids, trained.config, jobs)
    predicted = trained.predict_many(graphs)
    return make_report(dataset.labels, predicted, dataset.classes)


def make_report(truth: Sequence[str], predicted: Sequence[str], classes: Sequence[str]) -> dict:
    per_class = {}
    for c in classes:
        idx = [i for i, t in enumerate(truth) if t == c]
        correct = sum(1 for i in idx if predicted[i] == c)
        per_class[c] = {"n": len(idx), "correct": correct,
                        "rate": correct / len(idx) if idx else 0.0}
    rates = [v["rate"] for v in per_class.values() if v["n"]]
    return {
        "n": len(truth),
        "correct": sum(v["correct"] for v in per_class.values()),
        "per_class": per_class,
        "average": float(np.mean(rates)) if rates else 0.0,
    }


def repeated_split_eval(dataset: Dataset, config: PipelineConfig, repeats: int,
                        train_fraction: float = 0.5, jobs: int = 1) -> dict:
    """Mean and standard deviation of recognition rates over seeded random splits."""
    if repeats < 1:
        raise DataError("repeats must be >= 1")
    runs = []
    for seed in range(repeats):
        tr, te = split_dataset(dataset, train_fraction, seed=seed)
        trained = train_pipeline(tr, config, None, jobs)
        runs.append(evaluate(trained, te, jobs))
    per_class = {}
    for c in dataset.classes:
        rates = [r["per_class"][c]["rate"] for r in runs]
        per_class[c] = {"mean": float(np.mean(rates)), "std": float(np.std(rates))}
    avgs = [r["average"] for r in runs]
    return {"repeats": repeats, "per_class": per_class,
            "average": {"mean": float(np.mean(avgs)), "std": float(np.std(avgs))}, "runs": runs}


def format_report(report: dict) -> str:
    """Aligned text table of per-class rates and their macro average."""
    rows = []
    repeated = isinstance(report["average"], dict)
    for c, v in report["per_class"].items():
        if repeated:
            rows.append((c, f"{v['mean']:.3f} +/- {v['std']:.3f}"))
        else:
            rows.append((c, f"{v['rate']:.3f}  ({v['correct']}/{v['n']})"))
    avg = report["average"]
    rows.append(("Average", f"{avg['mean']:.3f} +/- {avg['std']:.3f}" if repeated else f"{avg:.3f}"))
    width = max(len("Category"), *(len(r[0]) for r in rows))
    lines = [f"{'Category':<{width}}  Recognition rate", "-" * (width + 18)]
    lines += [f"{name:<{width}}  {val}" for name, val in rows]
    return "\n".join(lines)

import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from rcgcat.cli import main
from rcgcat.config import PipelineConfig
from rcgcat.errors import DataError
from rcgcat.pipeline import ARTIFACTS, LOCK, MANIFEST, load_trained
from rcgcat.synth import ClassSpec, SynthConfig, synth_dataset


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    cfg = SynthConfig([ClassSpec("grid", "grid"), ClassSpec("rings", "rings")],
                      count=8, width=40, height=40, seed=3)
    synth_dataset(cfg, root, holdout=0.5)
    return root


@pytest.fixture(scope="module")
def model_dir(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    assert main(["train", str(dataset / "train"), "--out", str(out)]) == 0
    return out


def _artifact_bytes(d: Path) -> dict[str, bytes]:
    return {f: (d / f).read_bytes() for f in [*ARTIFACTS.values(), MANIFEST]}


def test_train_writes_artifacts_and_manifest(model_dir):
    names = sorted(p.name for p in model_dir.iterdir())
    assert names == sorted([*ARTIFACTS.values(), MANIFEST])
    manifest = json.loads((model_dir / MANIFEST).read_text())
    assert manifest["classes"] == ["grid", "rings"]
    assert len(manifest["inputs"]) == 8
    assert set(manifest["stages"]) == set(ARTIFACTS)


def test_rerun_is_byte_identical(dataset, model_dir, tmp_path):
    assert main(["train", str(dataset / "train"), "--out", str(tmp_path)]) == 0
    assert _artifact_bytes(tmp_path) == _artifact_bytes(model_dir)


def test_resume_from_any_stage(dataset, model_dir, tmp_path):
    out = tmp_path / "m"
    assert main(["train", str(dataset / "train"), "--out", str(out)]) == 0
    for victim in ("rcgs.json", "refined.json", "model.json"):
        (out / victim).unlink()
        assert main(["train", str(dataset / "train"), "--out", str(out)]) == 0
        assert _artifact_bytes(out) == _artifact_bytes(model_dir)
    # a tampered artifact is recomputed, not trusted
    (out / "features.json").write_text("{}")
    assert main(["train", str(dataset / "train"), "--out", str(out)]) == 0
    assert _artifact_bytes(out) == _artifact_bytes(model_dir)


def test_changed_svm_section_recomputes_only_the_model(dataset, model_dir, tmp_path):
    out = tmp_path / "m"
    main(["train", str(dataset / "train"), "--out", str(out)])
    cfg = PipelineConfig()
    cfg.svm.C = 5.0
    (tmp_path / "c.json").write_text(cfg.to_json())
    assert main(["train", str(dataset / "train"), "--out", str(out), "--config", str(tmp_path / "c.json")]) == 0
    new, old = _artifact_bytes(out), _artifact_bytes(model_dir)
    for f in ("rcgs.json", "mined.json", "refined.json", "features.json"):
        assert new[f] == old[f]
    assert new["model.json"] != old["model.json"]


def test_corrupt_image_names_file_and_stage(dataset, tmp_path, capsys):
    root = tmp_path / "d"
    shutil.copytree(dataset / "train", root)
    bad = root / "grid" / "zz_broken.ppm"
    bad.write_bytes(b"P6\n4 4\n255\nshort")
    assert main(["train", str(root), "--out", str(tmp_path / "m")]) == 3
    err = capsys.readouterr().err
    assert "zz_broken.ppm" in err and "segment" in err


def test_lock_fails_fast(dataset, tmp_path, capsys):
    out = tmp_path / "m"
    out.mkdir()
    (out / LOCK).touch()
    assert main(["train", str(dataset / "train"), "--out", str(out)]) == 3
    assert "locked" in capsys.readouterr().err


def test_predict_training_image(model_dir, dataset, capsys):
    img = sorted((dataset / "train" / "grid").iterdir())[0]
    assert main(["predict", str(model_dir), str(img)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["label"] in ("grid", "rings")
    assert all(math.isfinite(v) for v in out["scores"].values())
    assert len(out["features"]) == 8 and sum(out["features"]) == pytest.approx(1.0)


def test_predict_with_mismatched_bins(model_dir, dataset, tmp_path, capsys):
    cfg = PipelineConfig()
    cfg.features.bins_per_channel = 8
    (tmp_path / "c.json").write_text(cfg.to_json())
    img = sorted((dataset / "test" / "grid").iterdir())[0]
    assert main(["predict", str(model_dir), str(img), "--config", str(tmp_path / "c.json")]) == 3
    assert "features" in capsys.readouterr().err


def test_predict_missing_artifact(model_dir, tmp_path, capsys):
    broken = tmp_path / "m"
    shutil.copytree(model_dir, broken)
    (broken / "refined.json").unlink()
    assert main(["predict", str(broken), "x.ppm"]) == 3
    assert "missing artifact" in capsys.readouterr().err


def test_dimension_drift_detected(model_dir, tmp_path):
    broken = tmp_path / "m"
    shutil.copytree(model_dir, broken)
    manifest = json.loads((broken / MANIFEST).read_text())
    manifest["feature_dim"] += 1
    (broken / MANIFEST).write_text(json.dumps(manifest))
    with pytest.raises(DataError, match="drift"):
        load_trained(broken)


def test_eval_report(model_dir, dataset, capsys):
    assert main(["eval", str(model_dir), str(dataset / "train")]) == 0
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["average"] == 1.0
    assert report["n"] == sum(v["n"] for v in report["per_class"].values())
    assert report["correct"] == sum(v["correct"] for v in report["per_class"].values())
    weighted = sum(v["rate"] * v["n"] for v in report["per_class"].values())
    assert weighted == pytest.approx(report["correct"])
    assert "Average" in captured.err and "Recognition rate" in captured.err


def test_eval_unknown_class_dir(model_dir, dataset, tmp_path, capsys):
    root = tmp_path / "d"
    shutil.copytree(dataset / "test", root)
    shutil.copytree(root / "grid", root / "desert")
    assert main(["eval", str(model_dir), str(root)]) == 3
    assert "desert" in capsys.readouterr().err


def test_eval_repeated_splits(model_dir, dataset, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["eval", str(model_dir), str(dataset / "train"), "--repeat", "2", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["repeats"] == 2 and set(report["average"]) == {"mean", "std"}
    assert "+/-" in capsys.readouterr().out


def test_init_config_emits_full_defaults(tmp_path, capsys):
    assert main(["init-config"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["refinement"] == {"delta_sd": 0.1, "delta_sc": 0.65, "msc_removal": "above"}
    assert d["quantization"] == {"lam": 0.5}
    assert PipelineConfig.from_dict(d) == PipelineConfig()
    assert main(["init-config", "--seed", "9", "--out", str(tmp_path / "c.json")]) == 0
    assert PipelineConfig.load(tmp_path / "c.json").svm.seed == 9


def test_bad_config_is_a_data_error(tmp_path, capsys):
    (tmp_path / "c.json").write_text(json.dumps({"refinement": {"msc_removal": "sideways"}}))
    assert main(["init-config", "--config", str(tmp_path / "c.json")]) == 3
    (tmp_path / "d.json").write_text(json.dumps({"mining": {"bogus": 1}}))
    assert main(["init-config", "--config", str(tmp_path / "d.json")]) == 3


def test_synth_command(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "s"), "--count", "2", "--size", "24"]) == 0
    assert len(list((tmp_path / "s").rglob("*.ppm"))) == 6


def test_inspect_artifacts(model_dir, capsys):
    for name in [*ARTIFACTS.values(), MANIFEST]:
        assert main(["inspect", str(model_dir / name)]) == 0
        assert capsys.readouterr().out.strip()
    assert main(["inspect", str(model_dir / "features.json"), "--csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("image,") and len(lines) == 9


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(["train"]) == 2
    assert main(["eval", "a", "b", "--jobs", "0"]) == 2
    assert main(["inspect", "/nonexistent/file.json"]) == 3


def test_parallel_segmentation_matches_serial(dataset, model_dir, tmp_path):
    out = tmp_path / "p"
    assert main(["train", str(dataset / "train"), "--out", str(out), "--jobs", "2"]) == 0
    assert _artifact_bytes(out) == _artifact_bytes(model_dir)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rcgcat", "init-config"], capture_output=True, text=True)
    assert r.returncode == 0 and '"svm"' in r.stdout

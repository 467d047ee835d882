"""Command-line entry point.

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import PipelineConfig
from .errors import DataError, InvariantError, RcgError, StageError
from .imageio import scan_dataset
from .pipeline import (
    ARTIFACTS,
    MANIFEST,
    check_compatible,
    evaluate,
    format_report,
    load_trained,
    predict_image,
    repeated_split_eval,
    train_pipeline,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4

log = logging.getLogger("rcgcat")


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_train(args) -> int:
    dataset = scan_dataset(args.dataset)
    trained = train_pipeline(dataset, _config(args), args.out, jobs=args.jobs)
    print(json.dumps({
        "out": str(args.out),
        "images": len(dataset),
        "classes": dataset.classes,
        "mined": len(trained.mined),
        "refined": len(trained.refined),
    }, indent=1))
    return EXIT_OK


def cmd_predict(args) -> int:
    trained = load_trained(args.model)
    if args.config:
        check_compatible(trained, PipelineConfig.load(args.config))
    results = [predict_image(trained, p) for p in args.images]
    for p, r in zip(args.images, results):
        r["image"] = str(p)
    print(json.dumps(results[0] if len(results) == 1 else results, indent=1))
    return EXIT_OK


def cmd_eval(args) -> int:
    trained = load_trained(args.model)
    dataset = scan_dataset(args.dataset)
    if args.repeat:
        unknown = sorted(set(dataset.classes) - set(trained.svm.classes))
        if unknown:
            raise DataError(f"dataset classes not known to the model: {unknown}")
        report = repeated_split_eval(dataset, trained.config, args.repeat, jobs=args.jobs)
    else:
        report = evaluate(trained, dataset, jobs=args.jobs)
    text = json.dumps(report, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    print(format_report(report), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import default_config, load_config, synth_dataset

    cfg = load_config(args.config) if args.config else default_config(count=args.count, size=args.size)
    if args.seed is not None:
        cfg.seed = args.seed
    result = synth_dataset(cfg, args.out, holdout=args.holdout)
    parts = result if isinstance(result, tuple) else (result,)
    print(json.dumps({"out": str(args.out), "classes": parts[0].classes,
                      "images": [len(p) for p in parts]}))
    return EXIT_OK


def cmd_init_config(args) -> int:
    text = _config(args).to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _summarise(path: Path) -> str:
    data = json.loads(path.read_text())
    name = path.name
    if name == ARTIFACTS["rcgs"]:
        lines = [f"{len(data['items'])} RCGs"]
        for it in data["items"]:
            g = it["rcg"]
            lines.append(f"  {it['id']:<32} {it['label']:<12} |V|={len(g['vertices']):<4} |E|={len(g['edges'])}")
        return "\n".join(lines)
    if name in (ARTIFACTS["mined"], ARTIFACTS["refined"]):
        lines = [f"{len(data)} structures"]
        for d in data:
            extra = f"  msd={d['msd']}  rank={d['rank']}" if "msd" in d else ""
            lines.append(f"  {d['canon']:<8} n={d['n']}  edges={len(d['edges']):<3} support={d['support']:.3f}{extra}")
        return "\n".join(lines)
    if name == ARTIFACTS["features"]:
        return f"feature matrix {len(data['rows'])} x {len(data['columns'])}"
    if name == ARTIFACTS["model"]:
        return (f"linear SVM, {len(data['classes'])} classes {data['classes']}, "
                f"dimension {len(data['weights'][0])}, config {data['config']}")
    return json.dumps(data, indent=2, sort_keys=True)


def cmd_inspect(args) -> int:
    path = Path(args.artifact)
    if path.is_dir():
        path = path / MANIFEST
    if not path.exists():
        raise DataError(f"no such artifact: {path}")
    if args.csv:
        from .quantize import features_from_json, features_to_csv

        m, rows, cols = features_from_json(path.read_text())
        sys.stdout.write(features_to_csv(m, rows, cols))
        return EXIT_OK
    try:
        print(_summarise(path))
    except (json.JSONDecodeError, KeyError, TypeError, IndexError) as exc:
        raise DataError(f"cannot read artifact {path}: {exc}") from None
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline (or generator, for synth) config JSON")
    common.add_argument("--seed", type=int, help="override the seeds in the config")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for segmentation")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="rcgcat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train a model from a dataset directory")
    p.add_argument("dataset")
    p.add_argument("--out", required=True, help="model directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="classify images with a trained model")
    p.add_argument("model")
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", parents=[common], help="recognition rates on a labelled dataset")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--repeat", type=int, default=0,
                   help="retrain on this many random 50/50 splits of DATASET and report mean/std")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=20, help="images per class (default config only)")
    p.add_argument("--size", type=int, default=64, help="image side (default config only)")
    p.add_argument("--holdout", type=float, help="test fraction; writes train/ and test/ subtrees")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("init-config", parents=[common], help="print the full default config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_init_config)

    p = sub.add_parser("inspect", parents=[common], help="pretty-print a persisted artifact")
    p.add_argument("artifact")
    p.add_argument("--csv", action="store_true", help="dump a feature matrix as CSV")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.jobs < 1:
        parser.print_usage(sys.stderr)
        print("rcgcat: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, StageError) as exc:
        print(f"rcgcat: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvariantError, AssertionError) as exc:
        print(f"rcgcat: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except RcgError as exc:
        print(f"rcgcat: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

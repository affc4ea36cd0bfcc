"""Adapter command line: train a survival model on interchange files and
export grid predictions the main toolkit loads unchanged.

    adapter train --family forest --cohort train.csv --schema schema.json \
        --grid grid.json --seed 7 --out preds.csv

A metadata JSON sidecar (``<out>.meta.json`` by default) records the family,
the hyperparameters verbatim, the seed, library versions, and any curve
fix-ups applied. ``--predict-cohort`` exports predictions for a second cohort
using the model trained on ``--cohort``.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .forest import ForestSurvival
from .interchange import (
    InterchangeError,
    encode_design,
    read_cohort,
    read_grid,
    read_schema,
    write_predictions,
)
from .neural import NeuralSurvival

FAMILIES = ("forest", "neural-multitask")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapter", description="Survival model adapter for survuq interchange files."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("train", help="train a model and export predictions")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--cohort", required=True, help="training cohort CSV")
    p.add_argument("--schema", required=True, help="schema JSON")
    p.add_argument("--grid", required=True, help="shared time grid JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="predictions CSV for the training cohort")
    p.add_argument("--predict-cohort", help="optional second cohort to predict instead")
    p.add_argument("--meta-out", help="metadata sidecar path (default <out>.meta.json)")
    p.add_argument(
        "--hyper",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="hyperparameter override; repeatable, logged verbatim",
    )
    return parser


def _parse_hypers(pairs: list[str]) -> dict:
    out: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise InterchangeError(f"--hyper expects KEY=VALUE, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            value: object = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                value = raw
        out[key.strip()] = value
    return out


def _library_versions(family: str) -> dict:
    import sklearn

    versions = {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scikit-learn": sklearn.__version__,
    }
    if family == "neural-multitask":
        import torch

        versions["torch"] = torch.__version__
    return versions


def _sanitize_curves(curves: np.ndarray) -> tuple[np.ndarray, dict]:
    """Clip to [0,1] and enforce monotone non-increase; report what changed."""
    clipped = int(np.sum((curves < 0.0) | (curves > 1.0)))
    fixed = np.clip(curves, 0.0, 1.0)
    mono = np.minimum.accumulate(fixed, axis=1)
    monotonized = int(np.sum(mono != fixed))
    return mono, {"values_clipped": clipped, "values_monotonized": monotonized}


def _cmd_train(args) -> int:
    hypers = _parse_hypers(args.hyper)
    schema = read_schema(args.schema)
    grid = read_grid(args.grid)
    train = read_cohort(args.cohort, schema)
    target = read_cohort(args.predict_cohort, schema) if args.predict_cohort else train

    X_train, levels = encode_design(train)
    X_target, _ = encode_design(target, levels=levels)

    if args.family == "forest":
        model = ForestSurvival(hypers, seed=args.seed)
        model.fit(X_train, train.times, train.events)
        curves = model.predict_curves(X_target, grid)
        resolved = model.hyperparameters
    else:
        model = NeuralSurvival(hypers, seed=args.seed)
        model.fit(X_train, train.times, train.events, grid)
        curves = model.predict_curves(X_target, grid)
        resolved = model.hyperparameters

    curves, fixups = _sanitize_curves(curves)
    if fixups["values_clipped"] or fixups["values_monotonized"]:
        print(
            f"adapter: warning: adjusted exported curves "
            f"(clipped {fixups['values_clipped']}, "
            f"monotonized {fixups['values_monotonized']} values)",
            file=sys.stderr,
        )
    write_predictions(args.out, grid, target.ids, curves)

    meta_path = args.meta_out or f"{args.out}.meta.json"
    meta = {
        "family": args.family,
        "hyperparameters_given": list(args.hyper),
        "hyperparameters_resolved": {k: resolved[k] for k in sorted(resolved)},
        "seed": args.seed,
        "library_versions": _library_versions(args.family),
        "train_cohort": args.cohort,
        "predicted_cohort": args.predict_cohort or args.cohort,
        "n_train": len(train.ids),
        "n_predicted": len(target.ids),
        "grid_path": args.grid,
        "grid_times": [float(t) for t in grid],
        "curve_fixups": fixups,
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _cmd_train(args)
    except InterchangeError as e:
        print(f"adapter: error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # training failures surface as non-zero exit with a log
        print(f"adapter: training failed: {e!r}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())

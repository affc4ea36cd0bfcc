"""Command-line entry point.

Subcommands: ``gen`` (synthetic cohorts), ``fit-cox`` (fit + predict),
``uq score`` (per-patient uncertainty scores), ``uq sweep`` (UQ-constrained
AUC curve), ``metrics`` (C-index / IBS / AUC) and ``report`` (sweep + metrics
in one JSON document).

Exit codes: 0 success, 1 data or validation error, 2 usage error. Outputs are
deterministic given identical inputs and seed, carry no timestamps, and every
JSON report embeds the resolved configuration it was produced with. Scalar
flag defaults can be overridden with environment variables using the
``SURVUQ_`` prefix (``--loss-scale`` becomes ``SURVUQ_LOSS_SCALE``).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .core import Cohort, DataError, SurvUqError, TimeGrid, require_valid
from .coxph import encode_features, fit, predict_survival, save_model
from .evaluation import (
    binarize,
    curve_to_risk,
    default_thresholds,
    harrell_c_index,
    integrated_brier_score,
    model_uncertainty,
    roc_auc,
    uq_sweep,
)
from .io import (
    dump_json,
    format_float,
    load_cohort,
    load_grid,
    load_outcomes,
    load_predictions,
    load_schema,
    save_cohort,
    save_grid,
    save_predictions,
    save_schema,
    _load_json,
)
from .nomogram import load_nomogram, save_nomogram
from .synth import (
    config_from_json,
    config_to_json,
    empirical_censoring_rate,
    generate,
    make_nomogram,
)
from .uq import score_cohort

ENV_PREFIX = "SURVUQ_"


def _env_default(flag: str, fallback):
    value = os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"))
    return value if value is not None else fallback


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="survuq",
        description="Personalized uncertainty quantification for survival models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic cohort with ground truth")
    p.add_argument("--config", required=True, help="generator config JSON")
    p.add_argument("--out-prefix", required=True, help="prefix for the emitted files")

    p = sub.add_parser("fit-cox", help="fit a Cox model and export survival curves")
    p.add_argument("--train", required=True, help="training cohort CSV")
    p.add_argument("--schema", required=True, help="schema JSON")
    p.add_argument("--out", required=True, help="fitted model JSON")
    p.add_argument("--grid", help="time grid JSON (required with --pred-out)")
    p.add_argument("--pred-out", help="predictions CSV for the training cohort")
    p.add_argument("--test", help="optional second cohort to predict on")
    p.add_argument("--pred-test-out", help="predictions CSV for --test")
    p.add_argument("--ties", choices=("efron", "breslow"), default="efron")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--standardize", action="store_true")

    uq_parser = sub.add_parser("uq", help="personalized uncertainty scoring")
    uq_sub = uq_parser.add_subparsers(dest="uq_command", required=True)

    p = uq_sub.add_parser("score", help="per-patient uncertainty scores")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--pred-train", required=True)
    p.add_argument("--pred-test", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--nomogram", required=True)
    p.add_argument("--groups", type=int, default=int(_env_default("groups", 10)))
    p.add_argument(
        "--loss-scale",
        choices=("raw", "std"),
        default=str(_env_default("loss-scale", "raw")),
    )
    p.add_argument("--threads", type=int, default=int(_env_default("threads", 0)))
    p.add_argument("--out", required=True, help="output CSV (id,uq)")

    p = uq_sub.add_parser("sweep", help="UQ-threshold-constrained AUC curve")
    _add_sweep_args(p)
    p.add_argument("--out", required=True, help="sweep report JSON")

    p = sub.add_parser("metrics", help="C-index, IBS and classification AUC")
    p.add_argument("--test", required=True)
    p.add_argument("--pred-test", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--out", required=True, help="metrics JSON")

    p = sub.add_parser("report", help="combined sweep + metrics report")
    _add_sweep_args(p)
    p.add_argument("--out", required=True, help="combined report JSON")

    return parser


def _add_sweep_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--test", required=True, help="test cohort CSV (outcomes)")
    p.add_argument("--pred-test", required=True, help="test predictions CSV")
    p.add_argument("--uq", required=True, help="uncertainty scores CSV from 'uq score'")
    p.add_argument("--horizon", type=float, required=True, help="classification horizon")
    p.add_argument(
        "--thresholds",
        type=int,
        default=int(_env_default("thresholds", 101)),
        help="number of evenly spaced thresholds on [0,1]",
    )
    p.add_argument(
        "--min-retained", type=int, default=int(_env_default("min-retained", 20))
    )
    p.add_argument("--curve-out", help="optional CSV of (threshold,n_retained,auc)")


def _cmd_gen(args) -> int:
    config = config_from_json(_load_json(args.config))
    cohort, truth = generate(config)
    require_valid(cohort, "generated cohort")
    prefix = args.out_prefix
    os.makedirs(os.path.dirname(prefix) or ".", exist_ok=True)
    save_schema(cohort.schema, f"{prefix}.schema.json")
    save_cohort(cohort, f"{prefix}.cohort.csv")
    grid = next(iter(cohort.predictions.values())).grid
    save_grid(grid, f"{prefix}.grid.json")
    save_predictions(
        f"{prefix}.predictions.csv", grid, cohort.predictions, order=cohort.ids
    )
    save_nomogram(make_nomogram(config), f"{prefix}.nomogram.json")
    dump_json(
        {
            "config": config_to_json(config),
            "beta": list(truth.beta),
            "censoring_rate_empirical": empirical_censoring_rate(cohort),
            "alignment": {pid: truth.alignment[pid] for pid in cohort.ids},
            "linear_predictor": {pid: truth.linear_predictor[pid] for pid in cohort.ids},
            "true_curves": {
                pid: list(truth.true_curves[pid].values) for pid in cohort.ids
            },
        },
        f"{prefix}.truth.json",
    )
    return 0


def _cmd_fit_cox(args) -> int:
    schema = load_schema(args.schema)
    train = load_cohort(args.train, schema)
    require_valid(train, "training cohort")
    grid: Optional[TimeGrid] = load_grid(args.grid) if args.grid else None
    test = load_cohort(args.test, schema) if args.test else None
    if test is not None:
        require_valid(test, "test cohort")
    if args.pred_out and grid is None:
        raise DataError("--pred-out requires --grid")
    if args.test and not args.pred_test_out:
        raise DataError("--test requires --pred-test-out")
    if args.pred_test_out and not args.test:
        raise DataError("--pred-test-out requires --test")
    if args.pred_test_out and grid is None:
        raise DataError("--pred-test-out requires --grid")

    X, names, levels = encode_features(train)
    times = [train.outcomes[pid].time for pid in train.ids]
    events = [train.outcomes[pid].event for pid in train.ids]
    model = fit(
        X,
        times,
        events,
        ties=args.ties,
        tol=args.tol,
        max_iter=args.max_iter,
        ridge=args.ridge,
        standardize=args.standardize,
        covariate_names=names,
        categorical_levels=levels,
    )
    save_model(model, args.out)

    def _export(cohort, path):
        Xc, _, _ = encode_features(cohort, categorical_levels=model.categorical_levels)
        preds = predict_survival(model, Xc, grid)
        save_predictions(
            path, grid, dict(zip(cohort.ids, preds)), order=cohort.ids
        )

    if args.pred_out:
        _export(train, args.pred_out)
    if args.pred_test_out:
        _export(test, args.pred_test_out)
    return 0


def _cmd_uq_score(args) -> int:
    schema = load_schema(args.schema)
    spec = load_nomogram(args.nomogram)
    train = load_cohort(args.train, schema)
    test = load_cohort(args.test, schema)
    grid, pred_train = load_predictions(args.pred_train)
    grid_te, pred_test = load_predictions(args.pred_test)
    if grid.times != grid_te.times:
        raise DataError("training and test predictions are on different grids")
    # fail fast on the full cohort+prediction invariants (range, monotonicity,
    # 1:1 keying, shared grid) before any scoring starts
    train = Cohort(
        schema=schema,
        patients=train.patients,
        outcomes=train.outcomes,
        predictions={pid: pred_train[pid] for pid in train.ids if pid in pred_train},
    )
    test = Cohort(
        schema=schema,
        patients=test.patients,
        outcomes=test.outcomes,
        predictions={pid: pred_test[pid] for pid in test.ids if pid in pred_test},
    )
    require_valid(train, "training cohort")
    require_valid(test, "test cohort")
    scores = score_cohort(
        test,
        train,
        spec,
        k=args.groups,
        loss_scale=args.loss_scale,
        training_predictions=pred_train,
        test_predictions=pred_test,
        threads=args.threads,
    )
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "uq"])
        for s in scores:
            writer.writerow([s.patient_id, format_float(s.uq)])
    return 0


def _load_uq_csv(path: str) -> dict[str, float]:
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise DataError(f"cannot read file: {e}", path=path) from e
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["id", "uq"]:
            raise DataError("header must be id,uq", path=path, line=1)
        out: dict[str, float] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[row[0].strip()] = float(row[1])
            except (IndexError, ValueError):
                raise DataError("expected rows of id,uq", path, lineno)
    if not out:
        raise DataError("no scores found", path=path)
    return out


def _sweep_payload(args) -> dict:
    outcomes = load_outcomes(args.test)
    grid, preds = load_predictions(args.pred_test)
    uq_scores = _load_uq_csv(args.uq)
    labels = binarize(outcomes, args.horizon)
    risks = {pid: curve_to_risk(preds[pid], args.horizon) for pid in preds}
    base_auc = roc_auc(risks, labels)
    thresholds = default_thresholds(args.thresholds)
    curve = uq_sweep(risks, labels, uq_scores, thresholds, args.min_retained)
    mu = model_uncertainty(curve, base_auc)
    if args.curve_out:
        with open(args.curve_out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["threshold", "n_retained", "auc"])
            for p in curve.valid_points():
                writer.writerow(
                    [format_float(p.threshold), p.n_retained, format_float(p.auc)]
                )
    return {
        "base_auc": base_auc,
        "curve": [
            {
                "threshold": p.threshold,
                "n_retained": p.n_retained,
                "auc": p.auc,
                **({"skipped": p.skipped} if p.skipped else {}),
            }
            for p in curve.points
        ],
        "uncertainty_pct": mu.uncertainty_pct,
        "uncertainty_ratio": mu.uncertainty_ratio,
        "max_constrained_auc": mu.max_constrained_auc,
        "excluded_count": len(labels.excluded),
    }


def _metrics_payload(test_path: str, pred_path: str, horizon: float) -> dict:
    outcomes = load_outcomes(test_path)
    grid, preds = load_predictions(pred_path)
    missing = [pid for pid in outcomes if pid not in preds]
    if missing:
        raise DataError(f"no prediction for patients {missing[:5]}", path=pred_path)
    labels = binarize(outcomes, horizon)
    risks = {pid: curve_to_risk(preds[pid], horizon) for pid in preds}
    ids = list(outcomes)
    c_index = harrell_c_index(
        [outcomes[p].time for p in ids],
        [outcomes[p].event for p in ids],
        [risks[p] for p in ids],
    )
    ibs = integrated_brier_score(preds, outcomes, grid)
    return {
        "c_index": c_index,
        "ibs": ibs.value,
        "ibs_truncated_at": ibs.truncated_at,
        "base_auc": roc_auc(risks, labels),
        "excluded_count": len(labels.excluded),
    }


def _resolved_config(args) -> dict:
    skip = {"command", "uq_command", "func"}
    return {k.replace("_", "-"): v for k, v in sorted(vars(args).items()) if k not in skip}


def _cmd_uq_sweep(args) -> int:
    payload = _sweep_payload(args)
    payload["config"] = _resolved_config(args)
    dump_json(payload, args.out)
    return 0


def _cmd_metrics(args) -> int:
    payload = _metrics_payload(args.test, args.pred_test, args.horizon)
    payload["config"] = _resolved_config(args)
    dump_json(payload, args.out)
    return 0


def _cmd_report(args) -> int:
    payload = _sweep_payload(args)
    metrics = _metrics_payload(args.test, args.pred_test, args.horizon)
    for key in ("c_index", "ibs", "ibs_truncated_at"):
        payload[key] = metrics[key]
    payload["config"] = _resolved_config(args)
    dump_json(payload, args.out)
    return 0


_HANDLERS = {
    "gen": _cmd_gen,
    "fit-cox": _cmd_fit_cox,
    "metrics": _cmd_metrics,
    "report": _cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "uq":
            handler = _cmd_uq_score if args.uq_command == "score" else _cmd_uq_sweep
        else:
            handler = _HANDLERS[args.command]
        return handler(args)
    except (SurvUqError, ValueError, KeyError) as e:
        print(f"survuq: error: {e}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())

"""Command-line interface: train, predict, estimate, simulate, cv, bounds.

Exit codes: 0 success, 2 input/validation error, 3 numerical failure.
All floating output is printed with 10 significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np
from scipy.linalg import eigvalsh

from . import __version__
from .classifier import UClassifier
from .cv import CvReport, run_cv
from .data import ValidationError, load_labeled_csv, load_unlabeled_csv
from .error_rates import (
    NumericalError,
    estimated_error,
    fisher_error,
    ideal_error,
    kantorovich_bound,
    theoretical_error,
    theoretical_moments,
)
from .estimators import estimate_moments
from .simulate import (
    build_ar1,
    config_from_dict,
    run_error_curve_experiment,
    run_normality_experiment,
    sig10,
)
from .ustat import build_gram


def _fmt(x: float) -> str:
    return f"{float(x):.10g}"


def _write_or_print(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_train(args) -> int:
    dataset = load_labeled_csv(args.data, label_column=args.label_col)
    model = UClassifier.from_dataset(dataset)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(model.to_json())
        fh.write("\n")
    for lab, n, u in zip(model.classes_, model.class_counts_, model.u_stats_):
        print(f"class {lab}: n={n}  u={_fmt(u)}")
    print(f"model written to {args.output}")
    return 0


def cmd_predict(args) -> int:
    with open(args.model, encoding="utf-8") as fh:
        model = UClassifier.from_json(fh.read())
    try:
        X = load_unlabeled_csv(args.data)
    except ValidationError as exc:
        if "no observations" not in str(exc):
            raise
        X = np.empty((0, model.n_features_in_))
    header = ["row", "label"] + [f"score_{lab}" for lab in model.classes_]
    sys.stdout.write(",".join(header) + "\n")
    if X.shape[0] == 0:
        return 0
    scores = np.atleast_2d(model.discriminant(X))
    labels = model.predict(X)
    for i, (lab, row) in enumerate(zip(labels, scores), start=1):
        cells = [str(i), str(lab)] + [_fmt(v) for v in row]
        sys.stdout.write(",".join(cells) + "\n")
    return 0


def cmd_estimate(args) -> int:
    dataset = load_labeled_csv(args.data, label_column=args.label_col)
    try:
        lab_i, lab_j = [s.strip() for s in args.pair.split(",")]
    except ValueError:
        raise ValidationError(f"--pair needs two comma-separated labels, got '{args.pair}'")
    for lab in (lab_i, lab_j):
        if lab not in dataset.labels:
            raise ValidationError(f"class '{lab}' not present in {list(dataset.labels)}")
    gram = build_gram(dataset)
    est = estimate_moments(gram, lab_i, lab_j)
    doc = {
        "pair": [lab_i, lab_j],
        "n_i": est.n_i,
        "n_j": est.n_j,
        "e0": sig10(est.e0),
        "e_i": sig10(est.e_i),
        "e_j": sig10(est.e_j),
        "e_ij": sig10(est.e_ij),
        "var_i": sig10(est.var_i),
        "var_j": sig10(est.var_j),
        "mean": sig10(est.mean),
    }
    try:
        report = estimated_error(est)
        doc["estimated_error"] = {
            "rate_total": sig10(report.rate_total),
            "rate_1_given_2": sig10(report.rate_1_given_2),
            "rate_2_given_1": sig10(report.rate_2_given_1),
            "negative_mean_estimate": report.negative_mean_estimate,
        }
    except ValidationError as exc:
        doc["estimated_error"] = {"degenerate": True, "reason": str(exc)}
    if args.format == "csv":
        lines = [f"{k},{v}" for k, v in _flatten(doc)]
        _write_or_print("\n".join(lines) + "\n", args.output)
    else:
        _write_or_print(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def _flatten(doc, prefix=""):
    items = []
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            items.extend(_flatten(v, prefix=f"{key}."))
        else:
            items.append((key, v))
    return items


def cmd_simulate(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}")
    config = config_from_dict(doc)
    t0 = time.monotonic()
    if config.mode == "normality":
        result = run_normality_experiment(config, threads=args.threads)
    else:
        result = run_error_curve_experiment(config, threads=args.threads)
    wall = time.monotonic() - t0
    json_path = f"{args.output_prefix}.json"
    csv_path = f"{args.output_prefix}.csv"
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(result.to_json())
        fh.write("\n")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(result.to_csv())
    # wall time goes to stderr so result files stay byte-identical across runs
    print(f"wrote {json_path} and {csv_path}", file=sys.stderr)
    print(f"wall time: {wall:.2f} s", file=sys.stderr)
    return 0


def cmd_cv(args) -> int:
    if args.replay_counts:
        with open(args.replay_counts, encoding="utf-8") as fh:
            doc = json.load(fh)
        for key in ("labels", "total_n", "folds"):
            if key not in doc:
                raise ValidationError(f"replay file missing field '{key}'")
        counts = []
        sizes = []
        for fold in doc["folds"]:
            counts.append(
                {(e["true"], e["assigned"]): int(e["count"]) for e in fold.get("errors", [])}
            )
            sizes.append({k: int(v) for k, v in fold.get("test_sizes", {}).items()})
        report = CvReport.from_counts(
            labels=doc["labels"],
            counts=counts,
            test_sizes=sizes,
            total_n=doc["total_n"],
            mode=doc.get("mode", "pairwise"),
        )
    else:
        if args.data is None:
            raise ValidationError("cv needs a data file (or --replay-counts)")
        if args.seed is None:
            raise ValidationError("cv requires --seed for a reproducible split")
        dataset = load_labeled_csv(args.data, label_column=args.label_col)
        report = run_cv(
            dataset,
            K=args.k,
            seed=args.seed,
            mode=args.mode,
            threads=args.threads,
            stratified=args.stratified,
        )
    sys.stdout.write(report.to_table())
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    return 0


def cmd_bounds(args) -> int:
    if args.params:
        with open(args.params, encoding="utf-8") as fh:
            doc = json.load(fh)
        for key in ("mu1", "mu2", "sigma"):
            if key not in doc:
                raise ValidationError(f"params file missing field '{key}'")
        mu1 = np.asarray(doc["mu1"], dtype=np.float64)
        mu2 = np.asarray(doc["mu2"], dtype=np.float64)
        sigma_spec = doc["sigma"]
        if isinstance(sigma_spec, dict):
            if sigma_spec.get("kind") != "ar1":
                raise ValidationError("sigma spec must be a matrix or an ar1 object")
            S = build_ar1(
                mu1.shape[0], float(sigma_spec.get("sigma_sq", 1.0)), float(sigma_spec["rho"])
            ).realize()
        else:
            S = np.asarray(sigma_spec, dtype=np.float64)
        n1 = int(doc.get("n1", 2))
        n2 = int(doc.get("n2", 2))
        tm = theoretical_moments(mu1, mu2, S, S, n1, n2)
        eig = eigvalsh(S)
        kappa = float(eig[-1] / eig[0])
        fisher = fisher_error(tm)
        doc_out = {
            "kappa": sig10(kappa),
            "fisher_error": sig10(fisher),
            "ideal_error": sig10(ideal_error(tm)),
            "kantorovich_bound": sig10(kantorovich_bound(kappa, fisher)),
        }
        if "n1" in doc and "n2" in doc:
            report = theoretical_error(tm)
            doc_out["theoretical_error"] = {
                "rate_total": sig10(report.rate_total),
                "rate_1_given_2": sig10(report.rate_1_given_2),
                "rate_2_given_1": sig10(report.rate_2_given_1),
            }
    else:
        if args.kappa is None or args.fisher_rate is None:
            raise ValidationError("bounds needs either --params or both --kappa and --fisher-rate")
        doc_out = {
            "kappa": sig10(args.kappa),
            "fisher_error": sig10(args.fisher_rate),
            "kantorovich_bound": sig10(kantorovich_bound(args.kappa, args.fisher_rate)),
        }
    _write_or_print(json.dumps(doc_out, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uclassify",
        description="Bias-adjusted U-statistic classifier for high-dimensional data",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a classifier from a labeled CSV")
    p.add_argument("data", help="labeled CSV file")
    p.add_argument("--label-col", default="label")
    p.add_argument("--output", "-o", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify rows of a numeric CSV")
    p.add_argument("model", help="model JSON from 'train'")
    p.add_argument("data", help="unlabeled CSV of observations")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("estimate", help="moment estimates and estimated error for a class pair")
    p.add_argument("data", help="labeled CSV file")
    p.add_argument("--pair", required=True, help="two class labels, comma separated")
    p.add_argument("--label-col", default="label")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a seeded experiment from a JSON config")
    p.add_argument("config", help="experiment config JSON")
    p.add_argument("--output-prefix", "-o", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cv", help="K-fold cross-validation of the classifier")
    p.add_argument("data", nargs="?", default=None, help="labeled CSV file")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=("pairwise", "argmax"), default="pairwise")
    p.add_argument("--stratified", action="store_true", help="balance class counts across folds")
    p.add_argument("--label-col", default="label")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", "-o", default=None, help="write report JSON here")
    p.add_argument(
        "--replay-counts",
        default=None,
        help="aggregate a JSON table of per-fold error counts instead of running CV",
    )
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("bounds", help="Fisher/ideal rates and the eigenvalue-ratio bound")
    p.add_argument("--kappa", type=float, default=None, help="eigenvalue ratio >= 1")
    p.add_argument("--fisher-rate", type=float, default=None, help="benchmark rate in (0, 0.5)")
    p.add_argument("--params", default=None, help="JSON file with mu1, mu2, sigma")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

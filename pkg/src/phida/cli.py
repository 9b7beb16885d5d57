"""Command line interface: seeded benchmark runs, prediction, and inspection.

Exit codes: 0 on success, 1 on usage errors, 2 when one or more seeded runs
failed (their records are still emitted with explicit N/A values).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .datasets import load_dataset
from .harness import emit_report, run_experiment
from .learner import VARIANT_FLAGS
from .snapshot import load_model, save_model

USAGE_ERROR = 1
RUN_FAILURES = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _parse_seeds(text: str) -> list[int]:
    text = text.strip()
    if "," in text:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    count = int(text)
    if count <= 0:
        raise ValueError("seed count must be positive")
    return list(range(count))


def _read_config(path: str) -> dict:
    """Flat key=value text file; '#' starts a comment."""
    config = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            config[key.strip().replace("-", "_")] = value.strip()
    return config


def build_parser() -> _Parser:
    parser = _Parser(prog="phida", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded benchmark experiment")
    run.add_argument("--dataset", help="path to a delimited dataset file")
    run.add_argument("--label-col", default="-1", help="label column name or index (default: last)")
    run.add_argument("--mode", choices=["stationary", "nonstationary"], default="stationary")
    run.add_argument("--seeds", default="30", help="seed count n (0..n-1) or comma list")
    run.add_argument("--variant", choices=sorted(VARIANT_FLAGS), default="full")
    run.add_argument("--out", default="phida-out", help="output directory for reports and models")
    run.add_argument("--scale", choices=["none", "minmax"], default="none")
    run.add_argument("--config", help="flat key=value file overriding defaults")

    predict = sub.add_parser("predict", help="assign clusters to rows of a CSV")
    predict.add_argument("--model", required=True, help="model snapshot path")
    predict.add_argument("--input", required=True, help="input CSV of feature rows")
    predict.add_argument("--label-col", default=None, help="optional label column to drop")
    predict.add_argument("--out", default=None, help="write labels here instead of stdout")

    inspect = sub.add_parser("inspect", help="print a node/cluster summary of a snapshot")
    inspect.add_argument("--model", required=True, help="model snapshot path")
    return parser


def _load_features(path: str, label_col) -> np.ndarray:
    if label_col is not None:
        return load_dataset(path, label_col).features
    # No label column: every field of every row is a feature.
    import csv

    with open(path) as handle:
        text = handle.read()
    if not text.strip():
        raise ValueError(f"{path}: empty file")
    try:
        delimiter = csv.Sniffer().sniff(text[:4096], delimiters=",;\t").delimiter
    except csv.Error:
        delimiter = ","
    rows = [row for row in csv.reader(text.splitlines(), delimiter=delimiter) if row]
    start = 0
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        start = 1
    data = [[float(c) for c in row] for row in rows[start:]]
    return np.asarray(data, dtype=float)


def cmd_run(args) -> int:
    if args.config:
        config = _read_config(args.config)
        parser = build_parser()
        defaults = parser.parse_args(["run"])
        for key, value in config.items():
            if not hasattr(defaults, key):
                raise ValueError(f"unknown config key {key!r}")
        # Command line wins over config; config wins over built-in defaults.
        for key, value in config.items():
            if getattr(args, key) == getattr(defaults, key):
                setattr(args, key, value)
    if not args.dataset:
        print("phida run: error: --dataset is required", file=sys.stderr)
        return USAGE_ERROR

    label_col: int | str = args.label_col
    dataset = load_dataset(args.dataset, label_col)
    seeds = _parse_seeds(str(args.seeds))
    report, models = run_experiment(
        dataset,
        args.mode,
        seeds,
        variant=args.variant,
        scale=args.scale,
        keep_models=True,
    )
    paths = emit_report(report, args.out)
    model_dir = os.path.join(args.out, "models")
    os.makedirs(model_dir, exist_ok=True)
    for seed, model in models.items():
        save_model(model, os.path.join(model_dir, f"model_{args.mode}_{args.variant}_seed{seed}.json"))

    summary = report.summary()
    print(f"dataset={dataset.name} mode={args.mode} variant={args.variant} "
          f"runs={len(report.runs)} failed={report.n_failed}")
    for key, cell in summary["metrics"].items():
        mean = "N/A" if cell["mean"] is None else f"{cell['mean']:.4f}"
        std = "N/A" if cell["std"] is None else f"{cell['std']:.4f}"
        print(f"  {key:>14}: mean={mean} std={std} n={cell['n']}")
    print(f"wrote {len(paths)} report files to {args.out}")
    return RUN_FAILURES if report.n_failed else 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    features = _load_features(args.input, args.label_col)
    labels = model.predict_batch(features)
    lines = "\n".join(str(int(l)) for l in labels)
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(lines + "\n")
    else:
        print(lines)
    return 0


def cmd_inspect(args) -> int:
    model = load_model(args.model)
    print(f"snapshot: {args.model}")
    print(f"dimension: {model.raw_welford.dim}")
    print(f"samples seen: {model.samples_seen}")
    print(f"nodes: {model.node_count}")
    print(f"vigilance: interval={model.vigilance.lam} threshold={model.vigilance.tau:.6f}")
    if model.ph_view is None:
        print("no cached assignment view")
        return 0
    view = model.ph_view.view
    print(f"output clusters: {view.n_clusters} (support concentration {view.concentration:.4f})")
    for c, members in enumerate(view.clusters, start=1):
        support = int(view.cluster_supports[c - 1])
        print(f"  cluster {c}: {len(members)} nodes, support {support}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "predict":
            return cmd_predict(args)
        if args.command == "inspect":
            return cmd_inspect(args)
    except (ValueError, OSError) as exc:
        print(f"phida {args.command}: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Experiment orchestration over seeded runs.

Stationary runs shuffle the whole dataset per seed, train one pass, finalize,
and score the final clustering on all samples.  Nonstationary runs present
one class per stage; after each stage a snapshot of the model is finalized
and scored on every seen stage, filling the stage-score matrix behind the
per-stage summaries and the backward-transfer statistic.
"""

from __future__ import annotations

import copy
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset
from .learner import VARIANT_FLAGS, ModelState
from .metrics import ami, ari, avg_inc, bwt

METRIC_FIELDS = [
    "ari",
    "ami",
    "avg_inc_ari",
    "avg_inc_ami",
    "bwt_ari",
    "bwt_ami",
    "node_count",
    "cluster_count",
]


@dataclass
class StagedStream:
    stages: list[list[int]]  # sample indices per stage
    class_order: list[int]
    seed: int

    @property
    def n_stages(self) -> int:
        return len(self.stages)


@dataclass
class RunRecord:
    dataset: str
    mode: str
    variant: str
    seed: int
    status: str = "ok"  # "ok" | "failed"
    error: str | None = None
    metrics: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        doc = {
            "dataset": self.dataset,
            "mode": self.mode,
            "variant": self.variant,
            "seed": self.seed,
            "status": self.status,
            "error": self.error,
            "wall_time_s": self.wall_time_s,
        }
        for key in METRIC_FIELDS:
            doc[key] = self.metrics.get(key)
        for key in ("stage_scores_ari", "stage_scores_ami", "stage_matrix_ari", "stage_matrix_ami"):
            if key in self.metrics:
                doc[key] = self.metrics[key]
        return doc


@dataclass
class RunReport:
    dataset: str
    mode: str
    variant: str
    runs: list[RunRecord]

    @property
    def n_failed(self) -> int:
        return sum(1 for r in self.runs if r.status != "ok")

    def summary(self) -> dict:
        out = {
            "dataset": self.dataset,
            "mode": self.mode,
            "variant": self.variant,
            "n_runs": len(self.runs),
            "n_failed": self.n_failed,
            "metrics": {},
        }
        for key in METRIC_FIELDS:
            values = [
                r.metrics[key]
                for r in self.runs
                if r.status == "ok" and r.metrics.get(key) is not None
            ]
            if values:
                arr = np.asarray(values, dtype=float)
                out["metrics"][key] = {
                    "mean": float(arr.mean()),
                    "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                    "n": int(arr.size),
                }
            else:
                out["metrics"][key] = {"mean": None, "std": None, "n": 0}
        return out


def _matrix_to_lists(matrix: np.ndarray) -> list:
    """Stage-score matrix as nested lists with None for undefined entries."""
    return [[None if np.isnan(v) else float(v) for v in row] for row in matrix]


def build_stages(dataset: Dataset, seed: int) -> StagedStream:
    """One stage per class: seeded class order and within-stage sample order."""
    if dataset.n_classes < 2:
        raise ValueError("staged streams need at least two classes")
    rng = np.random.default_rng(seed)
    class_order = [int(c) for c in rng.permutation(dataset.n_classes)]
    stages = []
    for cls in class_order:
        idx = np.flatnonzero(dataset.labels == cls)
        stages.append([int(i) for i in rng.permutation(idx)])
    return StagedStream(stages=stages, class_order=class_order, seed=seed)


def _minmax_scale(features: np.ndarray) -> np.ndarray:
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (features - lo) / span


def _prepare_features(dataset: Dataset, scale: str) -> np.ndarray:
    if scale == "none":
        return dataset.features
    if scale == "minmax":
        return _minmax_scale(dataset.features)
    raise ValueError(f"unknown scale option {scale!r}")


def run_single(
    dataset: Dataset,
    mode: str,
    seed: int,
    variant: str = "full",
    scale: str = "none",
) -> tuple[RunRecord, ModelState | None]:
    """One seeded run; returns the record and the finalized model."""
    flags = VARIANT_FLAGS[variant]
    features = _prepare_features(dataset, scale)
    record = RunRecord(dataset=dataset.name, mode=mode, variant=variant, seed=seed)
    start = time.perf_counter()

    if mode == "stationary":
        rng = np.random.default_rng(seed)
        order = rng.permutation(dataset.n_samples)
        model = ModelState(flags)
        for i in order:
            model.process_sample(features[i])
        model.finalize()
        pred = model.predict_batch(features)
        record.metrics = {
            "ari": ari(dataset.labels, pred),
            "ami": ami(dataset.labels, pred),
            "avg_inc_ari": None,
            "avg_inc_ami": None,
            "bwt_ari": None,
            "bwt_ami": None,
            "node_count": model.node_count,
            "cluster_count": model.ph_view.view.n_clusters,
        }
    elif mode == "nonstationary":
        stream = build_stages(dataset, seed)
        j_max = stream.n_stages
        r_ari = np.full((j_max, j_max), np.nan)
        r_ami = np.full((j_max, j_max), np.nan)
        q_ari, q_ami = [], []
        model = ModelState(flags)
        seen: list[int] = []
        snapshot = None
        for j, stage in enumerate(stream.stages):
            for i in stage:
                model.process_sample(features[i])
            seen.extend(stage)
            snapshot = copy.deepcopy(model)
            snapshot.finalize()
            for i_stage in range(j + 1):
                idx = stream.stages[i_stage]
                pred = snapshot.predict_batch(features[idx])
                truth = dataset.labels[idx]
                r_ari[i_stage, j] = ari(truth, pred)
                r_ami[i_stage, j] = ami(truth, pred)
            pred_seen = snapshot.predict_batch(features[seen])
            truth_seen = dataset.labels[seen]
            q_ari.append(ari(truth_seen, pred_seen))
            q_ami.append(ami(truth_seen, pred_seen))
        model = snapshot  # the stage-J snapshot is the final state
        record.metrics = {
            "ari": q_ari[-1],
            "ami": q_ami[-1],
            "avg_inc_ari": avg_inc(q_ari),
            "avg_inc_ami": avg_inc(q_ami),
            "bwt_ari": bwt(r_ari) if j_max >= 2 else None,
            "bwt_ami": bwt(r_ami) if j_max >= 2 else None,
            "node_count": model.node_count,
            "cluster_count": model.ph_view.view.n_clusters,
        }
        record.metrics["stage_scores_ari"] = q_ari
        record.metrics["stage_scores_ami"] = q_ami
        record.metrics["stage_matrix_ari"] = _matrix_to_lists(r_ari)
        record.metrics["stage_matrix_ami"] = _matrix_to_lists(r_ami)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    record.wall_time_s = time.perf_counter() - start
    return record, model


def run_experiment(
    dataset: Dataset,
    mode: str,
    seeds,
    variant: str = "full",
    scale: str = "none",
    keep_models: bool = False,
) -> tuple[RunReport, dict[int, ModelState]]:
    """Run all seeds; per-seed failures are recorded, not raised."""
    if variant not in VARIANT_FLAGS:
        raise ValueError(f"unknown variant {variant!r}")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("no seeds given")
    runs = []
    models: dict[int, ModelState] = {}
    for seed in seeds:
        try:
            record, model = run_single(dataset, mode, seed, variant=variant, scale=scale)
            if keep_models and model is not None:
                models[seed] = model
        except Exception as exc:  # noqa: BLE001 - per-run isolation is the contract
            record = RunRecord(
                dataset=dataset.name,
                mode=mode,
                variant=variant,
                seed=seed,
                status="failed",
                error=f"{type(exc).__name__}: {exc}",
            )
        runs.append(record)
    return RunReport(dataset=dataset.name, mode=mode, variant=variant, runs=runs), models


def _format_value(value) -> str:
    if value is None:
        return "N/A"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(report: RunReport, out_dir) -> list[str]:
    """Write one JSON record per run plus an aggregate summary; returns paths.

    Wall times are recorded but are the only nondeterministic field; all
    other fields are reproducible bit-for-bit for a fixed dataset, seed, and
    variant.  Unavailable metrics are emitted as explicit nulls (N/A in the
    text table), never as zeros.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for record in report.runs:
        name = f"run_{report.mode}_{report.variant}_seed{record.seed}.json"
        path = os.path.join(out_dir, name)
        with open(path, "w") as handle:
            json.dump(record.to_dict(), handle, sort_keys=True)
            handle.write("\n")
        paths.append(path)

    summary = report.summary()
    summary_path = os.path.join(out_dir, f"summary_{report.mode}_{report.variant}.json")
    with open(summary_path, "w") as handle:
        json.dump(summary, handle, sort_keys=True)
        handle.write("\n")
    paths.append(summary_path)

    table_path = os.path.join(out_dir, f"summary_{report.mode}_{report.variant}.tsv")
    with open(table_path, "w") as handle:
        handle.write("metric\tmean\tstd\tn\n")
        for key in METRIC_FIELDS:
            cell = summary["metrics"][key]
            handle.write(
                f"{key}\t{_format_value(cell['mean'])}\t{_format_value(cell['std'])}\t{cell['n']}\n"
            )
    paths.append(table_path)
    return paths


def read_run_record(path) -> dict:
    with open(path) as handle:
        return json.load(handle)

"""Model snapshot serialization for harness checkpointing.

Snapshots are self-describing JSON documents with a versioned header, the
feature dimension, the node table, the vigilance and Welford states, and the
cached assignment view when one exists.  Floats survive the round trip
exactly (JSON uses shortest-repr encoding).
"""

from __future__ import annotations

import json

import numpy as np

from .assignment import AssignmentView
from .graph import NeighborGraph
from .learner import ModelFlags, ModelState, NodeState, PHView, VigilanceState
from .persistence import RawComponentPartition
from .stats import WelfordState
from .transform import TransformState

FORMAT_NAME = "phida-model"
FORMAT_VERSION = 1


def _transform_to_dict(t: TransformState) -> dict:
    return {
        "median": t.median.tolist(),
        "sigma_hat": t.sigma_hat.tolist(),
        "gamma": t.gamma,
    }


def _transform_from_dict(d: dict) -> TransformState:
    sigma = np.asarray(d["sigma_hat"], dtype=float)
    gamma = float(d["gamma"])
    return TransformState(
        median=np.asarray(d["median"], dtype=float),
        sigma_hat=sigma,
        gamma=gamma,
        denom=sigma**gamma,
    )


def _view_to_dict(ph: PHView) -> dict:
    v = ph.view
    return {
        "node_ids": list(ph.node_ids),
        "edges": [list(e) for e in ph.graph.edges],
        "component_of_node": {str(k): v2 for k, v2 in ph.component_of_node.items()},
        "mapping": {str(k): v2 for k, v2 in ph.mapping.items()},
        "clusters": [list(map(int, c)) for c in v.clusters],
        "reps_transformed": v.reps_transformed.tolist(),
        "supports": v.supports.tolist(),
        "cluster_supports": v.cluster_supports.tolist(),
        "concentration": v.concentration,
        "transform": _transform_to_dict(v.transform),
    }


def _view_from_dict(d: dict) -> PHView:
    transform = _transform_from_dict(d["transform"])
    node_ids = [int(i) for i in d["node_ids"]]
    view = AssignmentView(
        node_ids=node_ids,
        clusters=[list(map(int, c)) for c in d["clusters"]],
        reps_transformed=np.asarray(d["reps_transformed"], dtype=float),
        supports=np.asarray(d["supports"], dtype=float),
        transform=transform,
        cluster_supports=np.asarray(d["cluster_supports"], dtype=float),
        concentration=float(d["concentration"]),
    )
    graph = NeighborGraph(
        node_ids=list(range(len(node_ids))),
        edges=[tuple(e) for e in d["edges"]],
        candidate_distances=[],
    )
    mapping = {int(k): int(v) for k, v in d["mapping"].items()}
    comp = {int(k): int(v) for k, v in d["component_of_node"].items()}
    component_of = np.array([comp[nid] for nid in node_ids], dtype=int)
    comps: dict[int, list[int]] = {}
    for pos, cid in enumerate(component_of):
        comps.setdefault(int(cid), []).append(pos)
    partition = RawComponentPartition(
        component_of=component_of,
        components=[comps[c] for c in sorted(comps)],
        epsilon=0.0,
    )
    return PHView(
        node_ids=node_ids,
        graph=graph,
        tree=None,
        raw_partition=partition,
        component_of_node=comp,
        hierarchy=None,
        mapping=mapping,
        view=view,
        transform=transform,
    )


def model_to_dict(model: ModelState) -> dict:
    if model.raw_welford is None:
        raise ValueError("cannot snapshot an empty model")
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "dim": model.raw_welford.dim,
        "flags": {
            "refresh": model.flags.refresh,
            "delete": model.flags.delete,
            "prune_ph_input": model.flags.prune_ph_input,
            "use_ph": model.flags.use_ph,
        },
        "samples_seen": model.samples_seen,
        "maintenance_count": model.maintenance_count,
        "next_node_id": model._next_node_id,
        "counters": dict(model.counters),
        "nodes": [
            {
                "id": n.node_id,
                "representative": n.representative.tolist(),
                "support": n.support,
                "scale": n.scale,
                "active": n.active_for_prediction,
                "created_epoch": n.created_epoch,
            }
            for n in model.nodes
        ],
        "vigilance": {
            "lam": model.vigilance.lam,
            "tau": model.vigilance.tau,
            "smoothed_ratio": model.vigilance.smoothed_ratio,
            "ratio_initialized": model.vigilance.ratio_initialized,
            "recalc_counter": model.vigilance.recalc_counter,
            "trim_enabled": model.vigilance.trim_enabled,
            "buffer": [row.tolist() for row in model.vigilance.buffer],
        },
        "welford": {
            "count": model.raw_welford.count,
            "mean": model.raw_welford.mean.tolist(),
            "m2": model.raw_welford.m2.tolist(),
        },
        "view": None if model.ph_view is None else _view_to_dict(model.ph_view),
    }


def model_from_dict(doc: dict) -> ModelState:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} snapshot")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported snapshot version {doc.get('version')!r}")
    flags = ModelFlags(**doc["flags"])
    model = ModelState(flags)
    model.samples_seen = int(doc["samples_seen"])
    model.maintenance_count = int(doc["maintenance_count"])
    model._next_node_id = int(doc["next_node_id"])
    model.counters.update(doc.get("counters", {}))
    model.nodes = [
        NodeState(
            node_id=int(n["id"]),
            representative=np.asarray(n["representative"], dtype=float),
            support=int(n["support"]),
            scale=float(n["scale"]),
            active_for_prediction=bool(n["active"]),
            created_epoch=int(n["created_epoch"]),
        )
        for n in doc["nodes"]
    ]
    v = doc["vigilance"]
    model.vigilance = VigilanceState(
        lam=int(v["lam"]),
        tau=float(v["tau"]),
        smoothed_ratio=float(v["smoothed_ratio"]),
        ratio_initialized=bool(v["ratio_initialized"]),
        recalc_counter=int(v["recalc_counter"]),
        buffer=[np.asarray(row, dtype=float) for row in v["buffer"]],
        trim_enabled=bool(v["trim_enabled"]),
    )
    w = doc["welford"]
    welford = WelfordState(int(doc["dim"]))
    welford.count = int(w["count"])
    welford.mean = np.asarray(w["mean"], dtype=float)
    welford.m2 = np.asarray(w["m2"], dtype=float)
    model.raw_welford = welford
    if doc.get("view") is not None:
        model.ph_view = _view_from_dict(doc["view"])
    return model


def save_model(model: ModelState, path):
    with open(path, "w") as handle:
        json.dump(model_to_dict(model), handle, sort_keys=True)
        handle.write("\n")


def load_model(path) -> ModelState:
    with open(path) as handle:
        return model_from_dict(json.load(handle))

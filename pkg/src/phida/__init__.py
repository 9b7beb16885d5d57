"""Online prototype clustering with persistence-constrained node-to-cluster mapping."""

from .assignment import AssignmentView, assign, assign_batch, build_assignment_view
from .datasets import BlobSpec, Dataset, generate_blobs, generate_bridged_modes, load_dataset
from .estimator import PHIDA
from .graph import NeighborGraph, build_mutual_graph, neighborhood_size
from .harness import RunReport, build_stages, emit_report, run_experiment
from .hierarchy import ComponentHierarchy, agglomerate, expand_mapping, merge_height, select_cut
from .learner import VARIANT_FLAGS, ModelFlags, ModelState
from .metrics import ami, ari, avg_inc, bwt
from .persistence import (
    PersistenceTree,
    RawComponentPartition,
    extract_components,
    largest_gap_threshold,
    run_persistence,
)
from .snapshot import load_model, save_model
from .stats import WelfordState, hazen_iqr, hazen_median, hazen_quantile
from .transform import AdaptiveScaler, TransformState, apply_transform, fit_transform_state

__version__ = "0.1.0"

__all__ = [
    "AdaptiveScaler",
    "AssignmentView",
    "BlobSpec",
    "ComponentHierarchy",
    "Dataset",
    "ModelFlags",
    "ModelState",
    "NeighborGraph",
    "PHIDA",
    "PersistenceTree",
    "RawComponentPartition",
    "RunReport",
    "TransformState",
    "VARIANT_FLAGS",
    "WelfordState",
    "agglomerate",
    "ami",
    "apply_transform",
    "ari",
    "assign",
    "assign_batch",
    "avg_inc",
    "build_assignment_view",
    "build_mutual_graph",
    "build_stages",
    "bwt",
    "emit_report",
    "expand_mapping",
    "extract_components",
    "fit_transform_state",
    "generate_blobs",
    "generate_bridged_modes",
    "hazen_iqr",
    "hazen_median",
    "hazen_quantile",
    "largest_gap_threshold",
    "load_dataset",
    "load_model",
    "merge_height",
    "neighborhood_size",
    "run_experiment",
    "run_persistence",
    "save_model",
    "select_cut",
]

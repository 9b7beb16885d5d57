"""Out-of-sample cluster assignment from a frozen clustering view.

A query is scored against every output cluster: for multi-node clusters the
score adds the distance to the nearest member and a support-radius distance
(the member at which cumulative support reaches the support-concentration
fraction of the cluster total); singleton clusters use the squared distance
to their single member.  The smallest cluster index among the minimizers
wins, which makes assignment total and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .transform import TransformState, apply_transform


@dataclass
class AssignmentView:
    """Frozen output clustering over the retained nodes.

    ``clusters[c]`` lists row positions into the retained-node arrays for
    output cluster c + 1 (ids are 1-based on the outside).
    """

    node_ids: list[int]
    clusters: list[list[int]]
    reps_transformed: np.ndarray
    supports: np.ndarray
    transform: TransformState
    cluster_supports: np.ndarray
    concentration: float

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)


def build_assignment_view(node_ids, representatives, supports, mapping, transform) -> AssignmentView:
    """Assemble the view from retained nodes and their 1-based cluster mapping."""
    mapping = np.asarray(mapping, dtype=int)
    supports = np.asarray(supports, dtype=float)
    if mapping.size == 0:
        raise ValueError("empty mapping")
    if np.any(supports <= 0):
        raise ValueError("supports must be positive")
    n_clusters = int(mapping.max())
    if sorted(set(mapping.tolist())) != list(range(1, n_clusters + 1)):
        raise ValueError("cluster ids must be consecutive from 1")
    clusters = [list(np.flatnonzero(mapping == c + 1)) for c in range(n_clusters)]
    cluster_supports = np.array([supports[idx].sum() for idx in clusters])
    shares = cluster_supports / cluster_supports.sum()
    concentration = float(np.sum(shares**2))
    reps = apply_transform(transform, np.asarray(representatives, dtype=float))
    return AssignmentView(
        node_ids=list(node_ids),
        clusters=clusters,
        reps_transformed=reps,
        supports=supports,
        transform=transform,
        cluster_supports=cluster_supports,
        concentration=concentration,
    )


def cluster_scores(view: AssignmentView, x) -> np.ndarray:
    """Per-cluster assignment scores for one query, lower is better."""
    xt = apply_transform(view.transform, np.asarray(x, dtype=float).ravel())
    scores = np.empty(view.n_clusters)
    for c, members in enumerate(view.clusters):
        idx = np.asarray(members, dtype=int)
        diffs = view.reps_transformed[idx] - xt
        dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
        if idx.shape[0] == 1:
            scores[c] = float(dists[0] ** 2)
            continue
        # Order members by distance, ties by smaller node position.
        order = np.lexsort((idx, dists))
        cum = np.cumsum(view.supports[idx][order])
        target = view.concentration * view.cluster_supports[c]
        j = int(np.searchsorted(cum, target, side="left"))
        j = min(j, idx.shape[0] - 1)
        scores[c] = float(dists.min() + dists[order[j]])
    return scores


def assign(view: AssignmentView, x) -> int:
    """1-based output cluster for a query; smallest index wins ties."""
    scores = cluster_scores(view, x)
    return int(np.argmin(scores)) + 1


def assign_batch(view: AssignmentView, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return np.array([assign(view, row) for row in X], dtype=int)

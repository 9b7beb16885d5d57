"""Automatically pruned mutual k-nearest-neighbor graph over transformed points.

Used twice in the pipeline: over learned node representatives before the
persistence sweep, and over component centroids before the constrained
agglomeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .stats import hazen_iqr, hazen_median
from .transform import TransformState, apply_transform, fit_transform_state

PRUNE_IQR_FACTOR = 1.5


@dataclass
class NeighborGraph:
    """Undirected graph over n points, each unordered edge stored once.

    ``node_ids`` maps row positions to the caller's external indices;
    ``edges`` and ``adjacency`` use row positions.  ``candidate_distances``
    keeps the retained directed candidate distances per row (diagnostics).
    """

    node_ids: list[int]
    edges: list[tuple[int, int]]
    candidate_distances: list[np.ndarray]
    adjacency: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.adjacency:
            adj: list[list[int]] = [[] for _ in self.node_ids]
            for p, q in self.edges:
                adj[p].append(q)
                adj[q].append(p)
            self.adjacency = [sorted(a) for a in adj]

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def degree(self, p: int) -> int:
        return len(self.adjacency[p])

    def connected_components(self) -> list[list[int]]:
        """Connected components as lists of row positions, by first appearance."""
        seen = [False] * self.n_nodes
        comps = []
        for start in range(self.n_nodes):
            if seen[start]:
                continue
            stack = [start]
            seen[start] = True
            comp = []
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in self.adjacency[v]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        return comps


def neighborhood_size(n: int) -> int:
    """Neighbor count max(1, min(ceil(sqrt(ln n)), n - 1)) for n > 1."""
    if n <= 1:
        raise ValueError("neighborhood size needs at least two points")
    return max(1, min(math.ceil(math.sqrt(math.log(n))), n - 1))


def candidate_distances(points, weights=None, gamma: float = 0.0) -> np.ndarray:
    """Directed candidate distance matrix over already-transformed points.

    Without weights this is the Euclidean distance matrix with an infinite
    diagonal.  With per-point nonnegative weight vectors, a local weighted
    distance is computed from the averaged weights with an effective
    dimensionality correction, and only its excess over the Euclidean
    distance is added, scaled by gamma; the penalty is never negative.
    """
    z = np.asarray(points, dtype=float)
    if z.ndim != 2 or z.shape[0] < 2:
        raise ValueError("need at least two points")
    n, d = z.shape
    diff = z[:, None, :] - z[None, :, :]
    base = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if weights is None:
        delta = base
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n, d):
            raise ValueError(f"weights shape {w.shape} does not match points {(n, d)}")
        wbar = 0.5 * (w[:, None, :] + w[None, :, :])
        kappa = np.clip(1.0 / np.maximum(np.sum(wbar**2, axis=2), 1e-300), 1.0, float(d))
        local = np.sqrt(kappa * np.einsum("ijk,ijk->ij", wbar, diff**2))
        delta = base + gamma * np.maximum(local - base, 0.0)
    np.fill_diagonal(delta, np.inf)
    return delta


def _row_candidates(delta_row: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest finite entries; ties broken by smaller index."""
    finite = np.flatnonzero(np.isfinite(delta_row))
    order = finite[np.lexsort((finite, delta_row[finite]))]
    return order[:k]


def build_mutual_graph(points, weights=None, transform: TransformState | None = None) -> NeighborGraph:
    """Build the pruned mutual kNN graph over points.

    Points are given in data units and mapped through ``transform`` (fit from
    the points themselves when not supplied).  Each directed candidate row is
    pruned by the smaller of a row-wise and a global Hazen median + 1.5 IQR
    threshold, both computed over candidate distances only, never over all
    pairwise distances; a row emptied by pruning falls back to its single
    nearest candidate.  An undirected edge requires mutual retention.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("degenerate graph input: need at least two points")
    if transform is None:
        transform = fit_transform_state(pts)
    z = apply_transform(transform, pts)
    n = z.shape[0]
    k = neighborhood_size(n)
    delta = candidate_distances(z, weights=weights, gamma=transform.gamma)

    cand = [_row_candidates(delta[p], k) for p in range(n)]
    cand_dists = [delta[p, cand[p]] for p in range(n)]
    pooled = np.concatenate(cand_dists)
    theta_glob = hazen_median(pooled) + PRUNE_IQR_FACTOR * hazen_iqr(pooled)

    retained: list[set[int]] = []
    for p in range(n):
        dists = cand_dists[p]
        theta_loc = hazen_median(dists) + PRUNE_IQR_FACTOR * hazen_iqr(dists)
        cutoff = min(theta_loc, theta_glob)
        keep = cand[p][dists <= cutoff]
        if keep.size == 0:
            keep = cand[p][:1]
        retained.append(set(int(q) for q in keep))

    edges = []
    for p in range(n):
        for q in retained[p]:
            if p < q and p in retained[q]:
                edges.append((p, q))
    edges.sort()
    return NeighborGraph(
        node_ids=list(range(n)),
        edges=edges,
        candidate_distances=cand_dists,
    )

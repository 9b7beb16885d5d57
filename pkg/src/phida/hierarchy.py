"""Constrained agglomeration over raw persistence components.

Each raw component enters the hierarchy as one unit.  Merge weights are
persistence-stabilized support masses (with a support-total fallback), merges
are allowed only along edges of a mutual kNN graph over component centroids,
the merge height is the Ward-form weighted squared centroid distance, and the
output partition is the level just before the largest eligible jump in merge
height.  No level ever splits a raw component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import NeighborGraph
from .persistence import PersistenceTree, RawComponentPartition
from .stats import hazen_median


@dataclass
class ComponentSummary:
    """Per raw component: members, support total, centroid, persistence summary."""

    member_nodes: list[int]
    support: float
    centroid: np.ndarray
    persistence_summary: float
    merge_weight: float = 0.0


@dataclass
class ComponentHierarchy:
    """Recorded partitions over component ids, one merge per level.

    ``levels[0]`` is the singleton partition of raw components; each later
    level merges exactly two groups of the previous one.  ``merge_heights[l]``
    produced ``levels[l + 1]``.
    """

    levels: list[tuple[tuple[int, ...], ...]]
    merge_heights: list[float]
    c_min: int
    selected_level: int = 0

    @property
    def n_merges(self) -> int:
        return len(self.merge_heights)


def component_summaries(
    partition: RawComponentPartition,
    supports,
    transformed_reps: np.ndarray,
    tree: PersistenceTree | None = None,
    densities=None,
) -> list[ComponentSummary]:
    """Build per-component support totals, centroids, and persistence summaries.

    The persistence summary is the support-weighted mean, over member nodes,
    of the persistence of the mode each node joined during the sweep, with
    infinite persistence replaced by that mode's birth density minus the
    minimum density over all input nodes.  Without a tree (trivial
    partitions) the summary is 0 so that downstream weighting falls back to
    plain support totals.
    """
    supports = np.asarray(supports, dtype=float)
    rho_min = 0.0
    if tree is not None:
        if densities is None:
            raise ValueError("densities required when a persistence tree is given")
        rho_min = float(np.asarray(densities, dtype=float).min())
    summaries = []
    for members in partition.components:
        idx = np.asarray(members, dtype=int)
        s = float(supports[idx].sum())
        centroid = np.average(transformed_reps[idx], axis=0, weights=supports[idx])
        if tree is None:
            pi = 0.0
        else:
            per_node = np.empty(idx.shape[0])
            for j, node in enumerate(idx):
                mode = int(tree.node_mode[node])
                p = tree.persistence[mode]
                if math.isinf(p):
                    p = tree.birth_density[mode] - rho_min
                per_node[j] = p
            pi = float(np.average(per_node, weights=supports[idx]))
        summaries.append(
            ComponentSummary(
                member_nodes=list(members),
                support=s,
                centroid=centroid,
                persistence_summary=pi,
            )
        )
    return summaries


def ph_stable_masses(summaries: list[ComponentSummary]) -> np.ndarray:
    """Persistence-weighted masses S*_a = S_a * pi_a / (pi_a + pi_ref).

    ``pi_ref`` is the Hazen median of the positive persistence summaries.  If
    no positive summary exists, or any resulting mass is nonfinite or
    nonpositive, all components fall back to their plain support totals.
    """
    supports = np.array([s.support for s in summaries], dtype=float)
    pis = np.array([s.persistence_summary for s in summaries], dtype=float)
    positive = pis[np.isfinite(pis) & (pis > 0)]
    masses = None
    if positive.size > 0:
        pi_ref = hazen_median(positive)
        with np.errstate(invalid="ignore", divide="ignore"):
            masses = supports * pis / (pis + pi_ref)
        if not np.all(np.isfinite(masses)) or np.any(masses <= 0):
            masses = None
    if masses is None:
        masses = supports.copy()
    for s, w in zip(summaries, masses):
        s.merge_weight = float(w)
    return masses


def entropy_effective_count(masses) -> float:
    """exp of the Shannon entropy of the normalized masses; in [1, K]."""
    m = np.asarray(masses, dtype=float)
    if m.size == 0 or np.any(m < 0):
        raise ValueError("masses must be nonnegative and nonempty")
    total = m.sum()
    if total <= 0:
        raise ValueError("all-zero masses")
    p = m / total
    nz = p[p > 0]
    return float(np.exp(-np.sum(nz * np.log(nz))))


def min_retained_count(c_ent: float, k_ph: int) -> int:
    """Minimum retained group count from the entropy effective count.

    The effective count is taken to the nearest integer (then capped by the
    component count, floored at 1).  Rounding up instead would push the floor
    above the number of balanced groups whenever any low-mass component is
    present, which would block the hierarchy from ever absorbing such
    components; nearest-integer keeps the floor at the balanced-group count.
    """
    if k_ph < 1:
        raise ValueError("component count must be positive")
    return max(1, min(round(c_ent), k_ph))


def merge_height(weight_a: float, weight_b: float, centroid_a, centroid_b) -> float:
    """Ward-form height (Wa*Wb/(Wa+Wb)) * ||mu_a - mu_b||^2."""
    diff = np.asarray(centroid_a, dtype=float) - np.asarray(centroid_b, dtype=float)
    return float(weight_a * weight_b / (weight_a + weight_b) * np.dot(diff, diff))


def agglomerate(
    summaries: list[ComponentSummary],
    component_graph: NeighborGraph | None,
    c_min: int,
    record_past_floor: bool = True,
) -> ComponentHierarchy:
    """Greedy smallest-height merging along component-graph edges.

    Merges until no adjacent pair is left, recording every partition and
    height; the ``c_min`` floor is enforced at cut selection, where levels
    with fewer groups are ineligible.  With ``record_past_floor`` off the
    recording itself stops at ``c_min`` groups.  Group identity for
    tie-breaking is the smallest raw component id contained.
    """
    n = len(summaries)
    if n == 0:
        raise ValueError("no components to agglomerate")
    floor = 1 if record_past_floor else c_min

    members: dict[int, set[int]] = {a: {a} for a in range(n)}
    weights: dict[int, float] = {a: summaries[a].merge_weight for a in range(n)}
    centroids: dict[int, np.ndarray] = {a: summaries[a].centroid.copy() for a in range(n)}
    adj: dict[int, set[int]] = {a: set() for a in range(n)}
    if component_graph is not None:
        for p, q in component_graph.edges:
            adj[p].add(q)
            adj[q].add(p)

    def snapshot() -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(tuple(sorted(m)) for m in members.values()))

    levels = [snapshot()]
    heights: list[float] = []
    while len(members) > floor:
        best = None
        for a in sorted(members):
            for b in sorted(adj[a]):
                if b <= a:
                    continue
                q = merge_height(weights[a], weights[b], centroids[a], centroids[b])
                key = (q, a, b)
                if best is None or key < best:
                    best = key
        if best is None:
            break
        q, a, b = best
        wa, wb = weights[a], weights[b]
        centroids[a] = (wa * centroids[a] + wb * centroids[b]) / (wa + wb)
        weights[a] = wa + wb
        members[a] |= members[b]
        adj[a] = (adj[a] | adj[b]) - {a, b}
        for c in adj[b]:
            adj[c].discard(b)
            if c != a:
                adj[c].add(a)
        del members[b], weights[b], centroids[b], adj[b]
        heights.append(q)
        levels.append(snapshot())
    return ComponentHierarchy(levels=levels, merge_heights=heights, c_min=c_min)


def select_cut(hierarchy: ComponentHierarchy, c_min: int | None = None) -> int:
    """Level before the largest eligible jump between merge heights.

    Forward gaps are defined for levels 0..L-1 with the height before the
    first merge taken as 0, so the unmerged partition is a candidate; the
    last level has no forward gap.  Only levels with at least ``c_min``
    groups are eligible.  Ties prefer the larger upper height, then the
    later level.
    """
    if c_min is None:
        c_min = hierarchy.c_min
    q = hierarchy.merge_heights
    n_levels = len(hierarchy.levels)
    if n_levels == 1 or not q:
        hierarchy.selected_level = 0
        return 0
    best = None
    for level in range(n_levels - 1):
        if len(hierarchy.levels[level]) < c_min:
            continue
        prev = q[level - 1] if level >= 1 else 0.0
        gap = q[level] - prev
        key = (gap, q[level], level)
        if best is None or key > best[0]:
            best = (key, level)
    selected = best[1] if best is not None else 0
    hierarchy.selected_level = selected
    return selected


def expand_mapping(hierarchy: ComponentHierarchy, raw_partition: RawComponentPartition) -> np.ndarray:
    """Per-node output cluster ids (consecutive from 1, by first appearance)."""
    groups = hierarchy.levels[hierarchy.selected_level]
    comp_group = {}
    for gid, group in enumerate(groups):
        for comp in group:
            comp_group[comp] = gid
    n = raw_partition.component_of.shape[0]
    mapping = np.zeros(n, dtype=int)
    next_id = 1
    group_cluster: dict[int, int] = {}
    for i in range(n):
        comp = int(raw_partition.component_of[i])
        if comp not in comp_group:
            raise ValueError(f"node {i} belongs to component {comp} outside the hierarchy")
        gid = comp_group[comp]
        if gid not in group_cluster:
            group_cluster[gid] = next_id
            next_id += 1
        mapping[i] = group_cluster[gid]
    return mapping

"""Density-guided zero-dimensional persistence over a node graph.

Nodes activate in descending density.  A node with no active higher-density
neighbor births a mode; otherwise it attaches to the mode of its densest
active neighbor.  When an activated edge joins two distinct active modes, the
mode with the lower birth density dies into the other with persistence equal
to its birth density minus the current activation level.  Surviving modes get
infinite persistence.  Components are then read off by cutting the merge tree
at a threshold chosen just below the largest gap in the sorted finite
persistence levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import NeighborGraph


@dataclass
class PersistenceTree:
    """Merge tree of density modes.

    ``node_mode[i]`` is the root node of the mode that node i joined during
    the sweep.  ``mode_parent`` links each dead mode root to the root it died
    into; surviving roots are absent.  ``finite_levels`` holds the distinct
    positive finite persistence values, ascending.
    """

    node_mode: np.ndarray
    mode_parent: dict[int, int]
    birth_density: dict[int, float]
    persistence: dict[int, float]
    finite_levels: list[float] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return self.node_mode.shape[0]

    def surviving_modes(self) -> list[int]:
        return [m for m, p in self.persistence.items() if np.isinf(p)]


@dataclass
class RawComponentPartition:
    """Partition of the input nodes after cutting the merge tree."""

    component_of: np.ndarray  # per node, component ordinal 0..K-1
    components: list[list[int]]  # node positions per component
    epsilon: float
    label_modes: list[int] = field(default_factory=list)  # mode root per component

    @property
    def n_components(self) -> int:
        return len(self.components)


class _ModeForest:
    """Union-find over mode roots with path compression."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, v: int) -> int:
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def absorb(self, dying: int, surviving: int):
        self.parent[dying] = surviving


def run_persistence(graph: NeighborGraph, densities) -> PersistenceTree:
    """Run the descending-density sweep over the graph."""
    rho = np.asarray(densities, dtype=float).ravel()
    n = graph.n_nodes
    if n == 0:
        raise ValueError("empty graph")
    if rho.shape[0] != n:
        raise ValueError("density vector does not match graph size")
    if not np.all(np.isfinite(rho)):
        raise ValueError("densities must be finite")

    # Activation order: descending density, ties by ascending node index.
    order = sorted(range(n), key=lambda i: (-rho[i], i))
    forest = _ModeForest(n)
    node_mode = np.full(n, -1, dtype=int)
    birth: dict[int, float] = {}
    persistence: dict[int, float] = {}
    mode_parent: dict[int, int] = {}
    active = np.zeros(n, dtype=bool)

    for v in order:
        active_nbrs = [u for u in graph.adjacency[v] if active[u]]
        if not active_nbrs:
            node_mode[v] = v
            birth[v] = float(rho[v])
        else:
            # Attach to the densest active neighbor; ties to the smaller index.
            best = min(active_nbrs, key=lambda u: (-rho[u], u))
            node_mode[v] = forest.find(node_mode[best])
            # Every edge to an active neighbor activates now and may merge modes.
            for u in sorted(active_nbrs):
                mu = forest.find(node_mode[u])
                mv = forest.find(node_mode[v])
                if mu == mv:
                    continue
                # Lower birth density dies; ties keep the smaller root index.
                if (birth[mu], -mu) < (birth[mv], -mv):
                    dying, surviving = mu, mv
                else:
                    dying, surviving = mv, mu
                persistence[dying] = birth[dying] - float(rho[v])
                mode_parent[dying] = surviving
                forest.absorb(dying, surviving)
        active[v] = True

    for m in birth:
        if m not in persistence:
            persistence[m] = float("inf")

    finite = sorted({p for p in persistence.values() if np.isfinite(p) and p > 0})
    return PersistenceTree(
        node_mode=node_mode,
        mode_parent=mode_parent,
        birth_density=birth,
        persistence=persistence,
        finite_levels=finite,
    )


def largest_gap_threshold(finite_levels) -> float:
    """Threshold just below the largest gap in the ascending persistence levels.

    With fewer than two levels the threshold is 0.  Ties in the gap
    maximization are broken toward the larger upper level.
    """
    levels = list(finite_levels)
    if len(levels) <= 1:
        return 0.0
    best_gap = -np.inf
    best_r = 0
    prev = 0.0
    for r, a in enumerate(levels, start=1):
        gap = a - prev
        if gap >= best_gap:  # >= realizes the tie rule: later r wins
            best_gap = gap
            best_r = r
        prev = a
    return float(levels[best_r - 2]) if best_r >= 2 else 0.0


def extract_components(tree: PersistenceTree, epsilon: float) -> RawComponentPartition:
    """Label each node by its first ancestor mode with persistence > epsilon."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    n = tree.n_nodes
    resolved: dict[int, int] = {}

    def resolve(mode: int) -> int:
        chain = []
        m = mode
        while m not in resolved and tree.persistence[m] <= epsilon:
            chain.append(m)
            m = tree.mode_parent[m]
        label = resolved.get(m, m)
        for c in chain:
            resolved[c] = label
        resolved[mode] = label
        return label

    component_of = np.empty(n, dtype=int)
    components: list[list[int]] = []
    label_modes: list[int] = []
    label_index: dict[int, int] = {}
    for i in range(n):
        label = resolve(int(tree.node_mode[i]))
        if label not in label_index:
            label_index[label] = len(components)
            components.append([])
            label_modes.append(label)
        cid = label_index[label]
        component_of[i] = cid
        components[cid].append(i)
    return RawComponentPartition(
        component_of=component_of,
        components=components,
        epsilon=float(epsilon),
        label_modes=label_modes,
    )


def connected_component_partition(graph: NeighborGraph) -> RawComponentPartition:
    """Trivial partition where each graph connected component is one group."""
    comps = graph.connected_components()
    component_of = np.empty(graph.n_nodes, dtype=int)
    for cid, members in enumerate(comps):
        for v in members:
            component_of[v] = cid
    return RawComponentPartition(
        component_of=component_of,
        components=comps,
        epsilon=0.0,
        label_modes=[members[0] for members in comps],
    )

"""Online prototype learner with periodic persistence-guided view rebuilds.

Each sample either creates a node or updates the nearest one under an
adaptive vigilance threshold; a runner-up may receive a damped secondary
update when it clears the threshold and is compatible with the cached
component view.  The vigilance interval and threshold are recalculated from
recent-sample similarity windows screened by a Cholesky stability proxy.
Maintenance cycles rebuild the node graph, the raw components, the
constrained hierarchy, and the frozen assignment view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import AssignmentView, build_assignment_view
from .graph import NeighborGraph, build_mutual_graph
from .hierarchy import (
    ComponentHierarchy,
    component_summaries,
    agglomerate,
    entropy_effective_count,
    expand_mapping,
    min_retained_count,
    ph_stable_masses,
    select_cut,
)
from .persistence import (
    PersistenceTree,
    RawComponentPartition,
    connected_component_partition,
    extract_components,
    largest_gap_threshold,
    run_persistence,
)
from .stats import WelfordState, hazen_median, hazen_quantile
from .transform import TransformState, apply_transform, fit_transform_state

NODE_SCALE_FLOOR = 1e-6
ALPHA_GUARD = 1e-12
STABILITY_DET_MIN = 1e-6
COLD_START_NODES = 3
INITIAL_LAMBDA = 2
INITIAL_TAU = 0.0


@dataclass(frozen=True)
class ModelFlags:
    """Feature switches; the named variants map onto these."""

    refresh: bool = True
    delete: bool = True
    prune_ph_input: bool = True
    use_ph: bool = True


VARIANT_FLAGS = {
    "full": ModelFlags(),
    "noPH": ModelFlags(use_ph=False),
    "noRefresh": ModelFlags(refresh=False),
    "noDelete": ModelFlags(delete=False),
    "noPrune": ModelFlags(prune_ph_input=False),
}


@dataclass
class NodeState:
    """One learned prototype in data units."""

    node_id: int
    representative: np.ndarray
    support: int = 1
    scale: float = NODE_SCALE_FLOOR
    active_for_prediction: bool = False
    created_epoch: int = 0
    feature_weights: np.ndarray | None = None


@dataclass
class VigilanceState:
    lam: int = INITIAL_LAMBDA
    tau: float = INITIAL_TAU
    smoothed_ratio: float = 0.0
    ratio_initialized: bool = False
    recalc_counter: int = 0
    buffer: list[np.ndarray] = field(default_factory=list)
    trim_enabled: bool = False

    @property
    def retention(self) -> int:
        return 2 * self.lam

    def append(self, x: np.ndarray):
        self.buffer.append(x)
        if self.trim_enabled:
            self.trim()

    def trim(self):
        excess = len(self.buffer) - self.retention
        if excess > 0:
            del self.buffer[:excess]

    def window(self, m: int) -> np.ndarray:
        """The m most recent samples, oldest to newest."""
        return np.asarray(self.buffer[-m:], dtype=float)


@dataclass
class PHView:
    """Cached output of one maintenance rebuild."""

    node_ids: list[int]  # retained node ids, in graph row order
    graph: NeighborGraph
    tree: PersistenceTree | None
    raw_partition: RawComponentPartition
    component_of_node: dict[int, int]  # node id -> raw component ordinal
    hierarchy: ComponentHierarchy | None
    mapping: dict[int, int]  # node id -> output cluster (1-based)
    view: AssignmentView
    transform: TransformState


def inverse_distance_similarity(distance: float, scale: float) -> float:
    """Similarity 1 / (1 + alpha * distance) with alpha = 1 / max(scale, 1e-12).

    A nonfinite or nonpositive scale falls back to alpha = 1.
    """
    if math.isfinite(scale) and scale > 0:
        alpha = 1.0 / max(scale, ALPHA_GUARD)
    else:
        alpha = 1.0
    return 1.0 / (1.0 + alpha * distance)


def _cholesky_det(matrix: np.ndarray) -> tuple[bool, float]:
    """Attempt a Cholesky factorization; return (success, squared diag product)."""
    if not np.all(np.isfinite(matrix)):
        return False, 0.0
    try:
        factor = np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        return False, 0.0
    det = float(np.prod(np.diag(factor)) ** 2)
    if not math.isfinite(det):
        return False, 0.0
    return True, det


def stability_test(window: np.ndarray, transform: TransformState, max_node_scale: float) -> tuple[bool, float]:
    """Cholesky stability of the inverse-distance similarity matrix of a window.

    Returns (stable, determinant proxy).  The window is transformed with the
    current training transform; similarities use plain transformed Euclidean
    distances without any per-node weight penalty.
    """
    w = np.asarray(window, dtype=float)
    if w.ndim != 2 or w.shape[0] < 2:
        raise ValueError("stability window needs at least two samples")
    if not (math.isfinite(max_node_scale) and max_node_scale > 0):
        max_node_scale = 1.0
    alpha = 1.0 / max(max_node_scale, ALPHA_GUARD)
    z = apply_transform(transform, w)
    diff = z[:, None, :] - z[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    sim = 1.0 / (1.0 + alpha * dist)
    ok, det = _cholesky_det(sim)
    return (ok and det >= STABILITY_DET_MIN), det


def window_nn_similarities(window: np.ndarray, transform: TransformState, max_node_scale: float) -> np.ndarray:
    """Per-sample nearest-neighbor similarity inside a window (diagonal excluded)."""
    w = np.asarray(window, dtype=float)
    if not (math.isfinite(max_node_scale) and max_node_scale > 0):
        max_node_scale = 1.0
    alpha = 1.0 / max(max_node_scale, ALPHA_GUARD)
    z = apply_transform(transform, w)
    diff = z[:, None, :] - z[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    sim = 1.0 / (1.0 + alpha * dist)
    np.fill_diagonal(sim, -np.inf)
    return sim.max(axis=1)


class ModelState:
    """Complete mutable learner state; strictly single-writer."""

    def __init__(self, flags: ModelFlags | None = None):
        self.flags = flags if flags is not None else ModelFlags()
        self.nodes: list[NodeState] = []
        self.vigilance = VigilanceState()
        self.raw_welford: WelfordState | None = None
        self.ph_view: PHView | None = None
        self.samples_seen = 0
        self.maintenance_count = 0
        self._next_node_id = 0
        # Instrumentation, used by the benchmark harness and ablation checks.
        self.counters = {
            "midstream_view_rebuilds": 0,
            "view_rebuilds": 0,
            "nodes_deleted": 0,
            "isolated_pruned": 0,
            "zeta_component_consults": 0,
        }

    # ------------------------------------------------------------------ state
    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def dim(self) -> int | None:
        return None if self.raw_welford is None else self.raw_welford.dim

    def representatives(self) -> np.ndarray:
        return np.asarray([n.representative for n in self.nodes], dtype=float)

    def supports(self) -> np.ndarray:
        return np.asarray([n.support for n in self.nodes], dtype=float)

    def _raw_scale(self) -> float:
        """Upper scale s* from the global raw std, floored."""
        std = self.raw_welford.std()
        return max(float(std.max()), NODE_SCALE_FLOOR)

    def _max_node_scale(self) -> float:
        scales = [n.scale for n in self.nodes if math.isfinite(n.scale) and n.scale > 0]
        return max(scales) if scales else 1.0

    def _create_node(self, x: np.ndarray, scale: float) -> NodeState:
        node = NodeState(
            node_id=self._next_node_id,
            representative=x.copy(),
            support=1,
            scale=scale,
            created_epoch=self.maintenance_count,
        )
        self._next_node_id += 1
        self.nodes.append(node)
        return node

    # ------------------------------------------------------------- processing
    def process_sample(self, x) -> "ModelState":
        x = np.asarray(x, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise ValueError("sample contains nonfinite values")
        if self.raw_welford is None:
            self.raw_welford = WelfordState(x.shape[0])
        elif x.shape[0] != self.raw_welford.dim:
            raise ValueError(f"dimension mismatch: got {x.shape[0]}, model has {self.raw_welford.dim}")

        self.samples_seen += 1
        self.vigilance.append(x)
        self.raw_welford.update(x)
        s_star = self._raw_scale()

        recalc_ran = False
        if self.node_count < COLD_START_NODES:
            self._create_node(x, s_star)
            if self.node_count == 2:
                # Cold start: align the first node's scale with the second's.
                self.nodes[0].scale = self.nodes[1].scale
        else:
            self._match_and_learn(x, s_star)

        self.vigilance.recalc_counter += 1
        if self.vigilance.recalc_counter >= self.vigilance.lam and self.node_count > 2:
            self.vigilance_recalculate()
            recalc_ran = True

        if recalc_ran and self.flags.refresh:
            self.maintenance_cycle()
        return self

    def _match_and_learn(self, x: np.ndarray, s_star: float):
        reps = self.representatives()
        transform = fit_transform_state(reps)
        z = apply_transform(transform, reps)
        xt = apply_transform(transform, x)
        diff = z - xt
        dists = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        winner = int(np.argmin(dists))
        sim_winner = inverse_distance_similarity(float(dists[winner]), self.nodes[winner].scale)
        tau = self.vigilance.tau

        if sim_winner < tau:
            self._create_node(x, s_star)
            return

        node = self.nodes[winner]
        node.support += 1
        node.representative = node.representative + (x - node.representative) / node.support
        node.scale = s_star

        if self.node_count >= 2:
            masked = dists.copy()
            masked[winner] = np.inf
            runner = int(np.argmin(masked))
            sim_runner = inverse_distance_similarity(float(masked[runner]), self.nodes[runner].scale)
            if self.runner_up_gate(winner, runner, sim_runner):
                rnode = self.nodes[runner]
                rnode.support += 1
                chi = (sim_runner - tau) / max(1.0 - tau, ALPHA_GUARD)
                chi = min(max(chi, 0.0), 1.0)
                eta2 = chi / rnode.support
                rnode.representative = rnode.representative + eta2 * (x - rnode.representative)
                # The secondary update refreshes neither the global Welford
                # state nor the runner-up's stored scale.

        # Activation: the resonating winner turns active once its support
        # reaches the median support among nodes with support > 1.
        multi = [n.support for n in self.nodes if n.support > 1]
        if multi and node.support >= hazen_median(multi):
            node.active_for_prediction = True

    def runner_up_gate(self, winner: int, runner: int, sim_runner: float) -> bool:
        """Secondary-update gate: threshold test plus component compatibility."""
        if winner == runner:
            return False
        if not sim_runner > self.vigilance.tau:
            return False
        return self._component_compatible(winner, runner)

    def _component_compatible(self, winner: int, runner: int) -> bool:
        if not self.flags.use_ph:
            return True
        view = self.ph_view
        if view is None:
            return True
        if view.raw_partition.n_components < 2:
            return True
        if self.node_count < max(2 * self.vigilance.lam, 8):
            return True
        self.counters["zeta_component_consults"] += 1
        comp = view.component_of_node
        wid = self.nodes[winner].node_id
        rid = self.nodes[runner].node_id
        return wid in comp and rid in comp and comp[wid] == comp[rid]

    # --------------------------------------------------------------- vigilance
    def _current_cluster_count(self) -> float:
        view = self.ph_view
        if view is not None:
            if view.view is not None:
                return float(view.view.n_clusters)
            if view.raw_partition is not None:
                return float(view.raw_partition.n_components)
            if view.graph is not None:
                return float(len(view.graph.connected_components()))
        supports = self.supports()
        return entropy_effective_count(supports)

    def _recompute_threshold(self, window: np.ndarray, transform: TransformState, l_mix: int) -> float:
        """Quantile threshold from a window; also advances the smoothed ratio."""
        sims = window_nn_similarities(window, transform, self._max_node_scale())
        c = self._current_cluster_count()
        ratio = min(max(c / self.node_count, 0.0), 1.0)
        v = self.vigilance
        if not v.ratio_initialized:
            v.smoothed_ratio = ratio
            v.ratio_initialized = True
        else:
            mixed = ratio / l_mix + (1.0 - 1.0 / l_mix) * v.smoothed_ratio
            v.smoothed_ratio = min(max(mixed, 0.0), 1.0)
        return hazen_quantile(sims, v.smoothed_ratio)

    def vigilance_recalculate(self):
        """Adaptive interval and threshold update from buffered samples.

        A decremental scan grows the tested window from 2 samples up to the
        current interval; the first unstable window commits the last stable
        length and threshold.  If every window is stable, an incremental scan
        doubles outward up to twice the interval, committing either at the
        first unstable length or at exhaustion.
        """
        v = self.vigilance
        lam = v.lam
        transform = fit_transform_state(self.representatives())
        max_scale = self._max_node_scale()

        m0 = min(lam, len(v.buffer))
        lam_last, tau_last = lam, v.tau
        unstable_found = False
        for m in range(2, m0 + 1):
            stable, _ = stability_test(v.window(m), transform, max_scale)
            if not stable:
                unstable_found = True
                break
            lam_last = m
            tau_last = self._recompute_threshold(v.window(m), transform, l_mix=lam)

        if unstable_found:
            v.lam, v.tau = lam_last, tau_last
        else:
            m_max = min(2 * lam, len(v.buffer))
            if len(v.buffer) <= lam:
                pass  # interval and threshold unchanged
            else:
                lo = lam
                hi = min(lam + 1, m_max)
                stride = 1
                committed = False
                while hi <= m_max:
                    stable, _ = stability_test(v.window(hi), transform, max_scale)
                    if not stable:
                        v.lam = lo
                        v.tau = self._recompute_threshold(v.window(lo), transform, l_mix=lo)
                        committed = True
                        break
                    lo = hi
                    stride = min(2 * stride, m_max - lam)
                    hi = min(lam + stride, m_max)
                    if hi <= lo:
                        break
                if not committed:
                    v.lam = m_max
                    v.tau = self._recompute_threshold(v.window(m_max), transform, l_mix=lam)

        v.trim_enabled = True
        v.trim()
        v.recalc_counter = 0

    # -------------------------------------------------------------- maintenance
    def _delete_stale_nodes(self):
        """Drop support-1 nodes predating the previous maintenance, keeping >= 2."""
        candidates = [
            i
            for i, n in enumerate(self.nodes)
            if n.support == 1 and not n.active_for_prediction and n.created_epoch < self.maintenance_count
        ]
        if not candidates:
            return
        keep_budget = self.node_count - len(candidates)
        if keep_budget < 2:
            # Spare the densest candidates (ties to the smaller index).
            spared = sorted(candidates, key=lambda i: (-self.nodes[i].support, i))[: 2 - keep_budget]
            candidates = [i for i in candidates if i not in set(spared)]
        if not candidates:
            return
        doomed = set(candidates)
        self.nodes = [n for i, n in enumerate(self.nodes) if i not in doomed]
        self.counters["nodes_deleted"] += len(doomed)

    def _select_ph_input(self) -> list[int]:
        active = [i for i, n in enumerate(self.nodes) if n.active_for_prediction]
        return active if active else list(range(self.node_count))

    def _build_view(self, input_positions: list[int]) -> PHView | None:
        if len(input_positions) < 2:
            return None
        reps_all = self.representatives()
        supports_all = self.supports()

        positions = list(input_positions)
        transform = fit_transform_state(reps_all[positions])
        graph = build_mutual_graph(reps_all[positions], transform=transform)

        if self.flags.prune_ph_input:
            isolated = [p for p in range(graph.n_nodes) if graph.degree(p) == 0]
            if isolated:
                keep = [p for p in range(graph.n_nodes) if graph.degree(p) > 0]
                if len(keep) < 2:
                    # Retain the densest isolated nodes so at least two survive.
                    refill = sorted(
                        isolated,
                        key=lambda p: (-supports_all[positions[p]], positions[p]),
                    )[: 2 - len(keep)]
                    keep = sorted(keep + refill)
                kept_set = set(keep)
                dropped = [p for p in range(graph.n_nodes) if p not in kept_set]
                if dropped:
                    self.counters["isolated_pruned"] += len(dropped)
                    kept_ids = [self.nodes[positions[p]].node_id for p in keep]
                    if self.flags.delete:
                        removable = {
                            self.nodes[positions[p]].node_id
                            for p in dropped
                            if self.nodes[positions[p]].support == 1
                            and not self.nodes[positions[p]].active_for_prediction
                        }
                        if removable:
                            self.nodes = [n for n in self.nodes if n.node_id not in removable]
                            self.counters["nodes_deleted"] += len(removable)
                            reps_all = self.representatives()
                            supports_all = self.supports()
                    id_to_pos = {n.node_id: i for i, n in enumerate(self.nodes)}
                    positions = [id_to_pos[nid] for nid in kept_ids]
                    transform = fit_transform_state(reps_all[positions])
                    graph = build_mutual_graph(reps_all[positions], transform=transform)
        node_ids = [self.nodes[p].node_id for p in positions]
        supports = supports_all[positions]
        densities = np.log(supports)
        transformed_reps = apply_transform(transform, reps_all[positions])

        if self.flags.use_ph:
            tree = run_persistence(graph, densities)
            epsilon = largest_gap_threshold(tree.finite_levels)
            partition = extract_components(tree, epsilon)
        else:
            tree = None
            partition = connected_component_partition(graph)

        summaries = component_summaries(
            partition, supports, transformed_reps, tree=tree, densities=densities
        )
        masses = ph_stable_masses(summaries)
        c_ent = entropy_effective_count(masses)
        c_min = min_retained_count(c_ent, partition.n_components)

        centroids = np.asarray([s.centroid for s in summaries])
        component_graph = build_mutual_graph(centroids) if len(summaries) >= 2 else None
        hierarchy = agglomerate(summaries, component_graph, c_min)
        select_cut(hierarchy, c_min)
        mapping_arr = expand_mapping(hierarchy, partition)

        view = build_assignment_view(node_ids, reps_all[positions], supports, mapping_arr, transform)
        return PHView(
            node_ids=node_ids,
            graph=graph,
            tree=tree,
            raw_partition=partition,
            component_of_node={nid: int(partition.component_of[i]) for i, nid in enumerate(node_ids)},
            hierarchy=hierarchy,
            mapping={nid: int(mapping_arr[i]) for i, nid in enumerate(node_ids)},
            view=view,
            transform=transform,
        )

    def maintenance_cycle(self, force: bool = False) -> "ModelState":
        """Deletion, graph + component rebuild, and view refresh."""
        if not force and not self.flags.refresh:
            return self
        if self.flags.delete:
            self._delete_stale_nodes()
        new_view = self._build_view(self._select_ph_input())
        if new_view is not None:
            self.ph_view = new_view
            self.counters["view_rebuilds"] += 1
            if not force:
                self.counters["midstream_view_rebuilds"] += 1
        self.maintenance_count += 1
        return self

    def finalize(self) -> "ModelState":
        """Final rebuild after learning ends; the view becomes the predictor."""
        if self.node_count == 0:
            raise ValueError("cannot finalize a model with no nodes")
        self.maintenance_cycle(force=True)
        if self.ph_view is None:
            # The active-node rule can leave < 2 inputs; fall back to all nodes.
            fallback = self._build_view(list(range(self.node_count)))
            if fallback is None:
                fallback = self._degenerate_view()
            self.ph_view = fallback
            self.counters["view_rebuilds"] += 1
        return self

    def _degenerate_view(self) -> PHView:
        """Single-node model: one component, one cluster."""
        reps = self.representatives()
        supports = self.supports()
        transform = fit_transform_state(reps)
        node_ids = [n.node_id for n in self.nodes]
        graph = NeighborGraph(node_ids=list(range(len(node_ids))), edges=[], candidate_distances=[])
        partition = RawComponentPartition(
            component_of=np.zeros(len(node_ids), dtype=int),
            components=[list(range(len(node_ids)))],
            epsilon=0.0,
            label_modes=[0],
        )
        mapping_arr = np.ones(len(node_ids), dtype=int)
        view = build_assignment_view(node_ids, reps, supports, mapping_arr, transform)
        return PHView(
            node_ids=node_ids,
            graph=graph,
            tree=None,
            raw_partition=partition,
            component_of_node={nid: 0 for nid in node_ids},
            hierarchy=None,
            mapping={nid: 1 for nid in node_ids},
            view=view,
            transform=transform,
        )

    # ------------------------------------------------------------------- misc
    def predict(self, x) -> int:
        if self.ph_view is None:
            raise ValueError("model has no assignment view; call finalize() first")
        from .assignment import assign

        return assign(self.ph_view.view, x)

    def predict_batch(self, X) -> np.ndarray:
        if self.ph_view is None:
            raise ValueError("model has no assignment view; call finalize() first")
        from .assignment import assign_batch

        return assign_batch(self.ph_view.view, X)

import math

import numpy as np
import pytest
from oracles import reference_components, reference_sweep

from phida.graph import NeighborGraph
from phida.persistence import (
    connected_component_partition,
    extract_components,
    largest_gap_threshold,
    run_persistence,
)


def make_graph(n, edges):
    return NeighborGraph(node_ids=list(range(n)), edges=sorted(edges), candidate_distances=[])


class TestRunPersistence:
    def test_single_node(self):
        g = make_graph(1, [])
        tree = run_persistence(g, [math.log(4)])
        assert tree.persistence[0] == math.inf
        part = extract_components(tree, 0.0)
        assert part.n_components == 1

    def test_two_disconnected_nodes(self):
        g = make_graph(2, [])
        tree = run_persistence(g, [1.0, 2.0])
        assert all(math.isinf(tree.persistence[m]) for m in tree.persistence)
        assert len(tree.surviving_modes()) == 2

    def test_chain_example(self):
        # Supports (8, 2, 4) on a path 0-1-2: node 2's mode dies into node
        # 0's with persistence ln 4 - ln 2 = ln 2.
        g = make_graph(3, [(0, 1), (1, 2)])
        rho = [math.log(8), math.log(2), math.log(4)]
        tree = run_persistence(g, rho)
        assert tree.persistence[2] == pytest.approx(math.log(2))
        assert tree.mode_parent[2] == 0
        assert len(tree.surviving_modes()) == 1
        part = extract_components(tree, 0.0)
        assert part.n_components == 2
        assert sorted(map(tuple, part.components)) == [(0, 1), (2,)]

    def test_infinite_mode_count_equals_graph_components(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            n = int(rng.integers(2, 10))
            edges = set()
            for p in range(n):
                for q in range(p + 1, n):
                    if rng.uniform() < 0.3:
                        edges.add((p, q))
            g = make_graph(n, edges)
            rho = np.log(rng.integers(1, 50, size=n).astype(float))
            tree = run_persistence(g, rho)
            assert len(tree.surviving_modes()) == len(g.connected_components())

    def test_matches_reference_sweep(self):
        rng = np.random.default_rng(22)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            edges = {(p, q) for p in range(n) for q in range(p + 1, n) if rng.uniform() < 0.4}
            g = make_graph(n, edges)
            rho = np.log(rng.integers(1, 30, size=n).astype(float))
            tree = run_persistence(g, rho)
            node_mode, birth, pers, parent = reference_sweep(n, sorted(edges), rho)
            assert tree.node_mode.tolist() == node_mode
            for m, p in pers.items():
                assert tree.persistence[m] == pytest.approx(p)
            for eps in [0.0] + tree.finite_levels:
                got = extract_components(tree, eps)
                want = reference_components(node_mode, pers, parent, eps)
                # Compare as partitions (label values are representatives).
                got_groups = {}
                for i, c in enumerate(got.component_of):
                    got_groups.setdefault(int(c), set()).add(i)
                want_groups = {}
                for i, c in enumerate(want):
                    want_groups.setdefault(c, set()).add(i)
                assert sorted(map(frozenset, got_groups.values())) == sorted(
                    map(frozenset, want_groups.values())
                )


class TestLargestGapThreshold:
    def test_empty_and_single_level(self):
        assert largest_gap_threshold([]) == 0.0
        assert largest_gap_threshold([0.7]) == 0.0

    def test_two_levels(self):
        assert largest_gap_threshold([0.2, 1.0]) == pytest.approx(0.2)

    def test_tie_breaks_toward_larger_upper_level(self):
        assert largest_gap_threshold([0.5, 1.0]) == pytest.approx(0.5)

    def test_gap_at_zero(self):
        # First gap (from 0) is the largest: threshold stays 0.
        assert largest_gap_threshold([5.0, 5.5, 6.0]) == 0.0


class TestExtractComponents:
    def test_high_epsilon_gives_connected_components(self):
        g = make_graph(4, [(0, 1), (2, 3)])
        rho = [math.log(9), math.log(2), math.log(5), math.log(3)]
        tree = run_persistence(g, rho)
        eps = max([p for p in tree.persistence.values() if math.isfinite(p)], default=0.0)
        part = extract_components(tree, eps)
        assert part.n_components == len(g.connected_components())

    def test_monotone_coarsening_in_epsilon(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            n = int(rng.integers(2, 10))
            edges = {(p, q) for p in range(n) for q in range(p + 1, n) if rng.uniform() < 0.5}
            g = make_graph(n, edges)
            rho = np.log(rng.integers(1, 40, size=n).astype(float))
            tree = run_persistence(g, rho)
            eps_grid = [0.0] + tree.finite_levels
            prev = None
            for eps in eps_grid:
                part = extract_components(tree, eps)
                if prev is not None:
                    # Raising epsilon never splits: every previous component
                    # sits inside one current component.
                    for comp in prev.components:
                        targets = {int(part.component_of[i]) for i in comp}
                        assert len(targets) == 1
                assert part.n_components <= (prev.n_components if prev else n)
                prev = part

    def test_negative_epsilon_rejected(self):
        g = make_graph(2, [(0, 1)])
        tree = run_persistence(g, [1.0, 0.5])
        with pytest.raises(ValueError):
            extract_components(tree, -0.1)


class TestConnectedComponentPartition:
    def test_matches_graph_components(self):
        g = make_graph(5, [(0, 1), (1, 2)])
        part = connected_component_partition(g)
        assert part.n_components == 3
        assert sorted(map(tuple, part.components)) == [(0, 1, 2), (3,), (4,)]

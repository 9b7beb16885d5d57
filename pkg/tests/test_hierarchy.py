import math

import numpy as np
import pytest

from phida.graph import NeighborGraph
from phida.hierarchy import (
    ComponentHierarchy,
    ComponentSummary,
    agglomerate,
    component_summaries,
    entropy_effective_count,
    expand_mapping,
    merge_height,
    min_retained_count,
    ph_stable_masses,
    select_cut,
)
from phida.persistence import RawComponentPartition


def make_summaries(supports, pis, centroids):
    return [
        ComponentSummary(member_nodes=[i], support=s, centroid=np.asarray(c, dtype=float), persistence_summary=p)
        for i, (s, p, c) in enumerate(zip(supports, pis, centroids))
    ]


def full_graph(n):
    return NeighborGraph(
        node_ids=list(range(n)),
        edges=[(p, q) for p in range(n) for q in range(p + 1, n)],
        candidate_distances=[],
    )


def wcss(groups, weights, centroids):
    """Independent weighted within-group dispersion over component centroids."""
    total = 0.0
    for group in groups:
        idx = list(group)
        w = weights[idx]
        mu = np.average(centroids[idx], axis=0, weights=w)
        total += float(np.sum(w * np.sum((centroids[idx] - mu) ** 2, axis=1)))
    return total


class TestPhStableMasses:
    def test_equal_persistences_halve_supports(self):
        s = make_summaries([10, 6, 4], [2.0, 2.0, 2.0], [[0], [1], [2]])
        masses = ph_stable_masses(s)
        assert np.allclose(masses, [5.0, 3.0, 2.0])

    def test_all_zero_persistence_falls_back(self):
        s = make_summaries([10, 6], [0.0, 0.0], [[0], [1]])
        masses = ph_stable_masses(s)
        assert np.allclose(masses, [10.0, 6.0])

    def test_direct_evaluation(self):
        s = make_summaries([10], [3.0], [[0]])
        # pi_ref is the median of {3} = 3, so the mass is 10 * 3/6 = 5.
        assert ph_stable_masses(s)[0] == pytest.approx(5.0)

    def test_mixed_with_zero_mass_falls_back(self):
        s = make_summaries([10, 6], [3.0, 0.0], [[0], [1]])
        masses = ph_stable_masses(s)
        assert np.allclose(masses, [10.0, 6.0])

    def test_reference_ratio(self):
        s = make_summaries([10, 8], [3.0, 1.0], [[0], [1]])
        # pi_ref = median{3, 1} = 2; masses 10*3/5 = 6 and 8*1/3.
        masses = ph_stable_masses(s)
        assert masses[0] == pytest.approx(6.0)
        assert masses[1] == pytest.approx(8.0 / 3.0)


class TestEntropyEffectiveCount:
    def test_uniform(self):
        assert entropy_effective_count([2.0] * 5) == pytest.approx(5.0)

    def test_single(self):
        assert entropy_effective_count([3.0]) == pytest.approx(1.0)

    def test_three_one(self):
        p = np.array([0.75, 0.25])
        expected = math.exp(-(p * np.log(p)).sum())
        assert entropy_effective_count([3.0, 1.0]) == pytest.approx(expected)
        assert entropy_effective_count([3.0, 1.0]) == pytest.approx(1.7548, abs=1e-4)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            entropy_effective_count([0.0, 0.0])


class TestMinRetainedCount:
    @pytest.mark.parametrize("c_ent,k,expected", [(1.7548, 2, 2), (5.0, 3, 3), (1.0, 7, 1)])
    def test_examples(self, c_ent, k, expected):
        assert min_retained_count(c_ent, k) == expected


class TestMergeHeight:
    def test_unit_weights(self):
        assert merge_height(1, 1, [0.0], [2.0]) == pytest.approx(2.0)

    def test_identical_centroids(self):
        assert merge_height(3, 5, [1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_weight_two(self):
        assert merge_height(2, 2, [0.0], [1.0]) == pytest.approx(1.0)


class TestAgglomerate:
    def test_single_component(self):
        s = make_summaries([4], [1.0], [[0.0]])
        ph_stable_masses(s)
        h = agglomerate(s, None, c_min=1)
        assert h.levels == [((0,),)]
        assert h.merge_heights == []

    def test_two_adjacent(self):
        s = make_summaries([4, 4], [1.0, 1.0], [[0.0], [3.0]])
        ph_stable_masses(s)
        h = agglomerate(s, full_graph(2), c_min=1)
        assert h.n_merges == 1
        assert h.merge_heights[0] == pytest.approx(merge_height(2, 2, [0.0], [3.0]))

    def test_path_merges_closest_pair_first(self):
        s = make_summaries([2, 2, 2], [1.0, 1.0, 1.0], [[0.0], [1.0], [5.0]])
        ph_stable_masses(s)
        g = NeighborGraph(node_ids=[0, 1, 2], edges=[(0, 1), (1, 2)], candidate_distances=[])
        h = agglomerate(s, g, c_min=1)
        assert h.levels[1] == ((0, 1), (2,))

    def test_records_past_floor_by_default(self):
        s = make_summaries([1, 1, 1, 1], [1.0] * 4, [[0.0], [1.0], [2.0], [3.0]])
        ph_stable_masses(s)
        h = agglomerate(s, full_graph(4), c_min=2)
        # Recording continues below the floor so the cut can see the gaps
        # around it; the floor itself binds at cut selection.
        assert len(h.levels[-1]) == 1
        assert select_cut(h, 2) <= 2  # selected level keeps >= 2 groups

    def test_stop_at_floor_mode(self):
        s = make_summaries([1, 1, 1, 1], [1.0] * 4, [[0.0], [1.0], [2.0], [3.0]])
        ph_stable_masses(s)
        h = agglomerate(s, full_graph(4), c_min=2, record_past_floor=False)
        assert len(h.levels[-1]) == 2

    def test_disconnected_stops_early(self):
        s = make_summaries([1, 1, 1], [1.0] * 3, [[0.0], [1.0], [50.0]])
        ph_stable_masses(s)
        g = NeighborGraph(node_ids=[0, 1, 2], edges=[(0, 1)], candidate_distances=[])
        h = agglomerate(s, g, c_min=1)
        assert len(h.levels[-1]) == 2  # no eligible pair joins component 2

    def test_nested_coarsenings_and_weight_conservation(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            k = int(rng.integers(2, 8))
            supports = rng.integers(1, 20, size=k).astype(float)
            pis = rng.uniform(0, 3, size=k)
            centroids = rng.normal(size=(k, 2))
            s = make_summaries(supports, pis, centroids)
            masses = ph_stable_masses(s)
            h = agglomerate(s, full_graph(k), c_min=1)
            assert len(h.levels) == h.n_merges + 1
            for lower, upper in zip(h.levels, h.levels[1:]):
                assert len(upper) == len(lower) - 1
                lower_sets = [set(g_) for g_ in lower]
                for group in upper:
                    parts = [ls for ls in lower_sets if ls <= set(group)]
                    assert set().union(*parts) == set(group)
            total = masses.sum()
            # Merge weights are conserved across every level.
            for level in h.levels:
                level_total = sum(masses[list(g_)].sum() for g_ in level)
                assert level_total == pytest.approx(total)

    def test_merge_heights_match_wcss_increase(self):
        rng = np.random.default_rng(32)
        for _ in range(25):
            k = int(rng.integers(2, 9))
            supports = rng.integers(1, 25, size=k).astype(float)
            pis = rng.uniform(0, 2, size=k)
            centroids = rng.normal(size=(k, 3)) * rng.uniform(0.5, 4)
            s = make_summaries(supports, pis, centroids)
            masses = ph_stable_masses(s)
            h = agglomerate(s, full_graph(k), c_min=1)
            for level in range(h.n_merges):
                before = wcss(h.levels[level], masses, centroids)
                after = wcss(h.levels[level + 1], masses, centroids)
                assert h.merge_heights[level] == pytest.approx(after - before, rel=1e-9, abs=1e-12)


class TestSelectCut:
    def _hierarchy(self, heights, n0):
        levels = []
        groups = [tuple([i]) for i in range(n0)]
        levels.append(tuple(sorted(tuple(g) for g in groups)))
        for i in range(len(heights)):
            merged = tuple(sorted(groups[0] + groups[1]))
            groups = [merged] + groups[2:]
            levels.append(tuple(sorted(tuple(g) for g in groups)))
        return ComponentHierarchy(levels=levels, merge_heights=list(heights), c_min=1)

    def test_single_eligible_level(self):
        h = self._hierarchy([], 1)
        assert select_cut(h, 1) == 0

    def test_worked_example(self):
        h = self._hierarchy([1.0, 1.5, 5.0], 4)
        assert select_cut(h, 1) == 2

    def test_tie_prefers_larger_upper_height(self):
        # Gaps: level 0 -> 2.0-0, level 1 -> 4.0-2.0: tie, prefer level 1.
        h = self._hierarchy([2.0, 4.0], 3)
        assert select_cut(h, 1) == 1

    def test_c_min_filters_levels(self):
        h = self._hierarchy([1.0, 100.0], 3)
        # Level 2 (1 group) is never a gap candidate; with c_min = 2 the
        # eligible gap levels are 0 and 1.
        assert select_cut(h, 2) == 1

    def test_unmerged_partition_selectable(self):
        h = self._hierarchy([10.0, 10.5], 3)
        assert select_cut(h, 1) == 0


class TestExpandMapping:
    def _partition(self, component_of):
        comp_ids = sorted(set(component_of))
        comps = [[i for i, c in enumerate(component_of) if c == cid] for cid in comp_ids]
        return RawComponentPartition(
            component_of=np.asarray(component_of), components=comps, epsilon=0.0
        )

    def test_cut_at_level_zero_is_raw_labeling(self):
        part = self._partition([0, 0, 1, 2])
        h = ComponentHierarchy(levels=[((0,), (1,), (2,))], merge_heights=[], c_min=1)
        mapping = expand_mapping(h, part)
        assert mapping.tolist() == [1, 1, 2, 3]

    def test_full_merge_single_label(self):
        part = self._partition([0, 1, 1, 2])
        h = ComponentHierarchy(
            levels=[((0,), (1,), (2,)), ((0, 1), (2,)), ((0, 1, 2),)],
            merge_heights=[1.0, 2.0],
            c_min=1,
            selected_level=2,
        )
        mapping = expand_mapping(h, part)
        assert mapping.tolist() == [1, 1, 1, 1]

    def test_mapping_constant_on_raw_components(self):
        rng = np.random.default_rng(33)
        for _ in range(20):
            k = int(rng.integers(2, 7))
            n = int(rng.integers(k, 25))
            component_of = list(range(k)) + rng.integers(0, k, size=n - k).tolist()
            part = self._partition(component_of)
            supports = rng.integers(1, 9, size=n).astype(float)
            reps = rng.normal(size=(n, 2))
            summaries = component_summaries(part, supports, reps)
            ph_stable_masses(summaries)
            h = agglomerate(summaries, full_graph(k), c_min=1)
            select_cut(h, 1)
            mapping = expand_mapping(h, part)
            for comp in part.components:
                assert len({mapping[i] for i in comp}) == 1
            labels = sorted(set(mapping.tolist()))
            assert labels == list(range(1, len(labels) + 1))

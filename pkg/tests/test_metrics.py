import numpy as np
import pytest
from oracles import exhaustive_emi, pair_counting_ari

from phida.metrics import ami, ari, avg_inc, bwt, expected_mutual_information


def random_labeling(rng, n, c):
    labels = rng.integers(0, c, size=n).tolist()
    return labels


class TestAri:
    def test_identical(self):
        assert ari([1, 1, 2, 2], [1, 1, 2, 2]) == pytest.approx(1.0)

    def test_permuted_names(self):
        assert ari([1, 1, 2, 2], ["b", "b", "a", "a"]) == pytest.approx(1.0)

    def test_crossed_example_matches_oracle(self):
        truth, pred = [1, 1, 2, 2], [1, 2, 1, 2]
        assert ari(truth, pred) == pytest.approx(pair_counting_ari(truth, pred), abs=1e-12)

    def test_matches_oracle_on_random_cases(self):
        rng = np.random.default_rng(51)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            truth = random_labeling(rng, n, int(rng.integers(1, 5)))
            pred = random_labeling(rng, n, int(rng.integers(1, 5)))
            assert ari(truth, pred) == pytest.approx(pair_counting_ari(truth, pred), abs=1e-9)

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(52)
        truth = random_labeling(rng, 20, 4)
        pred = random_labeling(rng, 20, 3)
        renamed = [{0: "x", 1: "y", 2: "z"}[p] for p in pred]
        assert ari(truth, pred) == pytest.approx(ari(truth, renamed))

    def test_random_shuffle_mean_near_zero(self):
        rng = np.random.default_rng(53)
        truth = [i % 4 for i in range(40)]
        values = []
        for _ in range(1000):
            pred = list(truth)
            rng.shuffle(pred)
            values.append(ari(truth, pred))
        assert abs(np.mean(values)) < 0.05

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ari([1, 2], [1, 2, 3])


class TestAmi:
    def test_identical(self):
        assert ami([0, 0, 1, 1, 2], [5, 5, 6, 6, 7]) == pytest.approx(1.0)

    def test_single_cluster_pred_is_zero(self):
        assert ami([0, 0, 1, 1], [3, 3, 3, 3]) == pytest.approx(0.0)

    def test_symmetry(self):
        rng = np.random.default_rng(54)
        for _ in range(30):
            a = random_labeling(rng, 10, 3)
            b = random_labeling(rng, 10, 4)
            assert ami(a, b) == pytest.approx(ami(b, a), abs=1e-12)

    def test_emi_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(55)
        for _ in range(60):
            n = int(rng.integers(2, 8))
            truth = random_labeling(rng, n, int(rng.integers(1, 4)))
            pred = random_labeling(rng, n, int(rng.integers(1, 4)))
            t_counts = np.bincount(truth, minlength=max(truth) + 1)
            p_counts = np.bincount(pred, minlength=max(pred) + 1)
            got = expected_mutual_information(
                t_counts[t_counts > 0], p_counts[p_counts > 0]
            )
            want = exhaustive_emi(truth, pred)
            assert got == pytest.approx(want, abs=1e-9)

    def test_matches_sklearn_convention(self):
        from sklearn.metrics import adjusted_mutual_info_score

        rng = np.random.default_rng(56)
        for _ in range(40):
            n = int(rng.integers(4, 30))
            truth = random_labeling(rng, n, int(rng.integers(2, 5)))
            pred = random_labeling(rng, n, int(rng.integers(2, 5)))
            want = adjusted_mutual_info_score(truth, pred, average_method="max")
            assert ami(truth, pred) == pytest.approx(want, abs=1e-9)


class TestStreamSummaries:
    def test_avg_inc_single(self):
        assert avg_inc([0.7]) == pytest.approx(0.7)

    def test_avg_inc_pair(self):
        assert avg_inc([0.5, 1.0]) == pytest.approx(0.75)

    def test_avg_inc_zeros(self):
        assert avg_inc([0.0, 0.0, 0.0]) == 0.0

    def test_avg_inc_empty_rejected(self):
        with pytest.raises(ValueError):
            avg_inc([])

    def test_bwt_no_change(self):
        r = np.array([[0.5, 0.5], [np.nan, 0.9]])
        assert bwt(r) == pytest.approx(0.0)

    def test_bwt_two_stages(self):
        r = np.array([[0.8, 0.6], [np.nan, 0.7]])
        assert bwt(r) == pytest.approx(-0.2)

    def test_bwt_three_stages(self):
        r = np.full((3, 3), np.nan)
        r[0, 0], r[0, 2] = 0.5, 0.4
        r[1, 1], r[1, 2] = 0.2, 0.5
        r[2, 2] = 0.9
        assert bwt(r) == pytest.approx(0.1)

    def test_bwt_single_stage_rejected(self):
        with pytest.raises(ValueError):
            bwt(np.array([[1.0]]))

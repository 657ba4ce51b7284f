import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trendguard.errors import DegenerateLabels, EmptyInput
from trendguard.metrics import best_f1, precision_at_k, pr_auc, roc_auc

from oracles import allpairs_roc_auc, sweep_best_f1, sweep_pr_auc


def random_pairs(rng, n, p_pos=0.3, tie_prob=0.0):
    scores = rng.normal(size=n)
    if tie_prob > 0:  # quantize to force ties
        scores = np.round(scores, 1)
    labels = rng.random(n) < p_pos
    if not labels.any():
        labels[rng.integers(n)] = True
    if labels.all():
        labels[rng.integers(n)] = False
    return list(zip(scores.tolist(), labels.tolist()))


class TestPrecisionAtK:
    def test_three_of_four(self):
        pairs = [(0.9, True), (0.8, True), (0.7, False), (0.6, True), (0.5, False)]
        assert precision_at_k(pairs, 4) == 0.75

    def test_all_relevant(self):
        assert precision_at_k([(0.5, True), (0.4, True)], 2) == 1.0

    def test_k_capped(self):
        assert precision_at_k([(0.5, True), (0.4, False)], 10) == 0.5

    def test_ties_stable_input_order(self):
        pairs = [(0.5, False), (0.5, True), (0.5, True)]
        assert precision_at_k(pairs, 1) == 0.0  # first of the tie group wins

    def test_empty(self):
        with pytest.raises(EmptyInput):
            precision_at_k([], 3)

    def test_random_matches_count_oracle(self, rng):
        for _ in range(20):
            pairs = random_pairs(rng, 500)
            k = int(rng.integers(1, 300))
            order = sorted(range(500), key=lambda i: -pairs[i][0])
            expected = sum(1 for i in order[:k] if pairs[i][1]) / k
            assert precision_at_k(pairs, k) == pytest.approx(expected, abs=1e-12)


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([(0.9, True), (0.8, True), (0.2, False), (0.1, False)]) == 1.0

    def test_all_tied(self):
        assert roc_auc([(0.5, True), (0.5, False), (0.5, True)]) == 0.5

    def test_degenerate(self):
        with pytest.raises(DegenerateLabels):
            roc_auc([(0.5, True), (0.4, True)])
        with pytest.raises(EmptyInput):
            roc_auc([])

    def test_matches_allpairs_oracle(self, rng):
        for _ in range(30):
            pairs = random_pairs(rng, int(rng.integers(10, 1000)), tie_prob=0.5)
            assert roc_auc(pairs) == pytest.approx(allpairs_roc_auc(pairs), abs=1e-12)


class TestPrAuc:
    def test_perfect_ranking(self):
        assert pr_auc([(0.9, True), (0.8, True), (0.2, False)]) == 1.0

    def test_single_positive_ranked_last(self):
        n = 10
        pairs = [(float(n - i), False) for i in range(n - 1)] + [(0.0, True)]
        assert pr_auc(pairs) == pytest.approx(1.0 / n, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateLabels):
            pr_auc([(0.5, False), (0.4, False)])

    def test_matches_sweep_oracle(self, rng):
        for _ in range(30):
            pairs = random_pairs(rng, int(rng.integers(5, 600)), tie_prob=0.5)
            assert pr_auc(pairs) == pytest.approx(sweep_pr_auc(pairs), abs=1e-12)


class TestBestF1:
    def test_perfectly_separable(self):
        f1, _ = best_f1([(0.9, True), (0.8, True), (0.2, False)])
        assert f1 == 1.0

    def test_single_positive_scored_lowest(self):
        n = 7
        pairs = [(float(i + 1), False) for i in range(n - 1)] + [(0.0, True)]
        f1, threshold = best_f1(pairs)
        assert f1 == pytest.approx(2.0 / (n + 1), abs=1e-12)
        assert threshold == 0.0

    def test_tie_takes_lowest_threshold(self):
        # thresholds 1.0 and 0.5 both give f1 = 2/3; lowest must win
        pairs = [(1.0, True), (0.5, False), (0.2, True)]
        f1, threshold = best_f1(pairs)
        oracle_f1, oracle_t = sweep_best_f1(pairs)
        assert (f1, threshold) == (oracle_f1, oracle_t)

    def test_degenerate(self):
        with pytest.raises(DegenerateLabels):
            best_f1([(0.5, False)])

    def test_matches_sweep_oracle(self, rng):
        for _ in range(30):
            pairs = random_pairs(rng, int(rng.integers(5, 600)), tie_prob=0.5)
            ours_f1, ours_t = best_f1(pairs)
            oracle_f1, oracle_t = sweep_best_f1(pairs)
            assert ours_f1 == pytest.approx(oracle_f1, abs=1e-12)
            assert ours_t == pytest.approx(oracle_t, abs=1e-12)


class TestMonotoneInvariance:
    @pytest.mark.parametrize("transform", [lambda x: 2 * x + 1, lambda x: x**3])
    def test_rank_metrics_invariant(self, rng, transform):
        for _ in range(10):
            pairs = random_pairs(rng, 300, tie_prob=0.5)
            mapped = [(transform(s), rel) for s, rel in pairs]
            assert roc_auc(mapped) == pytest.approx(roc_auc(pairs), abs=1e-12)
            assert pr_auc(mapped) == pytest.approx(pr_auc(pairs), abs=1e-12)
            assert best_f1(mapped)[0] == pytest.approx(best_f1(pairs)[0], abs=1e-12)
            assert precision_at_k(mapped, 50) == precision_at_k(pairs, 50)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_auc_bounds(self, seed):
        rng = np.random.default_rng(seed)
        pairs = random_pairs(rng, 50)
        assert 0.0 <= roc_auc(pairs) <= 1.0
        assert 0.0 <= pr_auc(pairs) <= 1.0

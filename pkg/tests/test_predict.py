import numpy as np
import pytest

from mlrank.baselines import PairwiseLogits, ScoreThresholdHeads
from mlrank.gmlr import GaussianPrediction
from mlrank.predict import predict_crpc, predict_gmlr, predict_lsep, ranks_from_scores


def gp(mu):
    mu = np.asarray(mu, dtype=float)
    return GaussianPrediction(mu=mu, log_var=np.zeros_like(mu))


class TestPredictGmlr:
    def test_sign_rule_and_ranks(self):
        pred = predict_gmlr(gp([0.5, -0.2, 1.3]))
        assert pred.positive_mask.tolist() == [True, False, True]
        assert pred.predicted_ranks.tolist() == [1, 0, 2]

    def test_no_positives(self):
        pred = predict_gmlr(gp([-1.0, -2.0]))
        assert pred.predicted_ranks.tolist() == [0, 0]

    def test_zero_boundary_is_positive(self):
        pred = predict_gmlr(gp([0.0, -0.1]))
        assert pred.positive_mask.tolist() == [True, False]


class TestPredictLsep:
    def test_threshold_rule(self):
        pred = predict_lsep(ScoreThresholdHeads(np.array([1.0, 0.0]), np.array([0.0, 1.0])))
        assert pred.positive_mask.tolist() == [True, False]

    def test_equal_is_negative(self):
        pred = predict_lsep(ScoreThresholdHeads(np.array([0.7, 0.7]), np.array([0.7, 0.7])))
        assert not pred.positive_mask.any()

    def test_ranks(self):
        pred = predict_lsep(ScoreThresholdHeads(np.array([3.0, 2.0, 1.0]), np.array([0.0, 0.0, 2.0])))
        assert pred.predicted_ranks.tolist() == [2, 1, 0]


class TestPredictCrpc:
    def test_all_zero_logits_no_positives(self):
        pred = predict_crpc(PairwiseLogits(np.zeros(3), 2))
        assert not pred.positive_mask.any()

    def test_dominant_class(self):
        lg = PairwiseLogits(np.zeros(3), 2)
        values = lg.values.copy()
        values[lg.slot(0, 1)] = 10.0
        values[lg.slot(0, 2)] = 10.0
        pred = predict_crpc(PairwiseLogits(values, 2))
        assert pred.positive_mask.tolist() == [True, False]
        assert pred.predicted_ranks[0] == 1

    def test_matches_scores_recomputation(self):
        from mlrank.baselines import crpc_scores

        rng = np.random.default_rng(2)
        values = rng.normal(size=6)
        pred = predict_crpc(PairwiseLogits(values, 3))
        scores, virtual = crpc_scores(PairwiseLogits(values, 3))
        np.testing.assert_array_equal(pred.positive_mask, scores > virtual)


class TestRankAssignment:
    def test_dense_against_sort_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            k = int(rng.integers(1, 9))
            scores = rng.normal(size=k)
            mask = rng.integers(0, 2, size=k).astype(bool)
            ranks = ranks_from_scores(scores, mask)
            positives = np.flatnonzero(mask)
            # oracle: sort positives by descending score, assign m..1
            expect = np.zeros(k, dtype=int)
            for i, c in enumerate(sorted(positives, key=lambda c: (-scores[c], c))):
                expect[c] = len(positives) - i
            assert ranks.tolist() == expect.tolist()
            assert sorted(ranks[positives].tolist()) == list(range(1, len(positives) + 1))
            assert not ranks[~mask].any()

    def test_argsort_invariance_under_shift(self):
        rng = np.random.default_rng(12)
        mu = rng.normal(size=6)
        base = predict_gmlr(gp(mu))
        shifted = predict_gmlr(gp(mu + 5.0))
        order_base = np.argsort(-base.scores, kind="stable")
        order_shift = np.argsort(-shifted.scores, kind="stable")
        assert order_base.tolist() == order_shift.tolist()
        assert shifted.positive_mask.all()  # bipartition moved

    def test_tie_break_by_class_index(self):
        ranks = ranks_from_scores(np.array([0.5, 0.5, 0.1]), np.array([True, True, True]))
        # equal scores: lower class index wins the higher rank
        assert ranks.tolist() == [3, 2, 1]

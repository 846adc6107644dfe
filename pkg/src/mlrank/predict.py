"""Unified prediction interface across methods.

Every method reduces to a score vector plus a bipartition rule:

* gmlr: scores are the predicted means, positive iff mean >= 0;
* lsep: scores are the score head f, positive iff f_k > g_k;
* crpc: scores are the soft-vote tallies, positive iff strictly above
  the virtual label's tally.

Predicted ranks are dense 1..m over the positives, higher score means
higher rank, and exact score ties always break by ascending class index
so outputs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import PairwiseLogits, ScoreThresholdHeads, crpc_scores
from .gmlr import GaussianPrediction


@dataclass(frozen=True)
class Prediction:
    scores: np.ndarray
    positive_mask: np.ndarray
    predicted_ranks: np.ndarray


def ranks_from_scores(scores, positive_mask) -> np.ndarray:
    """Dense ranks 1..m for the positives by ascending score, 0 elsewhere.

    Ties break by ascending class index: of two equal-scored positives
    the lower index receives the higher rank.
    """
    scores = np.asarray(scores, dtype=float)
    positive_mask = np.asarray(positive_mask, dtype=bool)
    ranks = np.zeros(scores.size, dtype=int)
    positives = np.flatnonzero(positive_mask)
    ordered = sorted(positives.tolist(), key=lambda c: (-scores[c], c))
    for offset, c in enumerate(ordered):
        ranks[c] = len(ordered) - offset
    return ranks


def _prediction(scores, positive_mask) -> Prediction:
    scores = np.asarray(scores, dtype=float)
    positive_mask = np.asarray(positive_mask, dtype=bool)
    return Prediction(
        scores=scores,
        positive_mask=positive_mask,
        predicted_ranks=ranks_from_scores(scores, positive_mask),
    )


def predict_gmlr(pred: GaussianPrediction) -> Prediction:
    """Mean >= 0 marks a predicted positive; means are the ranking scores."""
    return _prediction(pred.mu, pred.mu >= 0.0)


def predict_lsep(heads: ScoreThresholdHeads) -> Prediction:
    """f_k > g_k marks a predicted positive; scores f rank the classes."""
    return _prediction(heads.scores, heads.scores > heads.thresholds)


def predict_crpc(logits: PairwiseLogits) -> Prediction:
    """Soft-vote score strictly above the virtual label's marks a positive."""
    scores, virtual = crpc_scores(logits)
    return _prediction(scores, scores > virtual)

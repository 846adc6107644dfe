"""Per-instance evaluation metrics and their dataset averages.

Ranking metrics (Kendall tau-b, Spearman rho, Goodman-Kruskal gamma)
compare the ground-truth rank vector (0 for negatives) against the
predicted score vector over all K classes.  Classification metrics
(Hamming loss, Max-1 error, F1) compare bipartitions.  Dataset values
are arithmetic means of the per-instance values; instances on which a
metric is undefined are skipped for that metric and counted.

Pair-counting notation, over all K(K-1)/2 unordered pairs:
N_c concordant, N_d discordant, N_1 tied in the prediction, N_2 tied in
the ground truth (pairs tied on both sides count toward both N_1 and
N_2, and toward neither N_c nor N_d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricReport:
    """Dataset means of the six metrics, plus per-metric skip counts."""

    tau_b: float
    spearman_rho: float
    gamma: float
    hamming_loss: float
    max1: float
    f1: float
    n_instances: int
    skipped_tau_b: int = 0
    skipped_spearman_rho: int = 0
    skipped_gamma: int = 0
    skipped_max1: int = 0


def _pair_counts(gt, pred):
    gt = np.asarray(gt, dtype=float)
    pred = np.asarray(pred, dtype=float)
    i, j = np.triu_indices(gt.size, k=1)
    dg = gt[i] - gt[j]
    dp = pred[i] - pred[j]
    nc = int(np.count_nonzero(dg * dp > 0))
    nd = int(np.count_nonzero(dg * dp < 0))
    n1 = int(np.count_nonzero(dp == 0))
    n2 = int(np.count_nonzero(dg == 0))
    return nc, nd, n1, n2


def _check_lengths(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError("inputs must be 1-d vectors of equal length")
    return a, b


def _degenerate(gt, pred) -> bool:
    return bool(np.all(gt == gt[0]) or np.all(pred == pred[0]))


def kendall_tau_b(gt_ranks, pred_scores) -> float:
    """(N_c - N_d) / sqrt((N_0 - N_1)(N_0 - N_2))."""
    gt, pred = _check_lengths(gt_ranks, pred_scores)
    if gt.size < 2 or _degenerate(gt, pred):
        raise ValueError("undefined correlation")
    nc, nd, n1, n2 = _pair_counts(gt, pred)
    n0 = gt.size * (gt.size - 1) // 2
    return (nc - nd) / math.sqrt((n0 - n1) * (n0 - n2))


def fractional_ranks(values) -> np.ndarray:
    """Ascending 1-based positions with ties averaged."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(gt_ranks, pred_scores) -> float:
    """1 - 6 sum(d_i^2) / (K (K^2 - 1)) on fractional ranks of both sides.

    Both inputs are converted to average-of-positions ranks first, which
    is the standard extension of the displayed no-tie formula to vectors
    with ties (ground truths always tie their rank-0 negatives).
    """
    gt, pred = _check_lengths(gt_ranks, pred_scores)
    if gt.size < 2 or _degenerate(gt, pred):
        raise ValueError("undefined correlation")
    d = fractional_ranks(pred) - fractional_ranks(gt)
    k = gt.size
    return 1.0 - 6.0 * float(np.sum(d * d)) / (k * (k * k - 1))


def goodman_kruskal_gamma(gt_ranks, pred_scores) -> float:
    """(N_c - N_d) / (N_c + N_d); pairs tied on either side are excluded."""
    gt, pred = _check_lengths(gt_ranks, pred_scores)
    nc, nd, _, _ = _pair_counts(gt, pred)
    if nc + nd == 0:
        raise ValueError("undefined correlation")
    return (nc - nd) / (nc + nd)


def hamming_loss(gt_positive, pred_positive) -> float:
    """Fraction of classes whose bipartition disagrees."""
    gt, pred = _check_lengths(gt_positive, pred_positive)
    return float(np.count_nonzero(gt.astype(bool) != pred.astype(bool))) / gt.size


def max1_error(gt_positive, pred_scores) -> int:
    """1 iff the top-scored class is not a ground-truth positive.

    Argmax ties break by ascending class index.  Undefined when the
    ground truth has no positives.
    """
    gt, pred = _check_lengths(gt_positive, pred_scores)
    gt = gt.astype(bool)
    if not np.any(gt):
        raise ValueError("M-1 undefined")
    return 0 if gt[int(np.argmax(pred))] else 1


def f1_score(gt_positive, pred_positive) -> float:
    """TP / (TP + (FP + FN) / 2); 1.0 when both masks are empty."""
    gt, pred = _check_lengths(gt_positive, pred_positive)
    gt = gt.astype(bool)
    pred = pred.astype(bool)
    tp = int(np.count_nonzero(gt & pred))
    fp = int(np.count_nonzero(~gt & pred))
    fn = int(np.count_nonzero(gt & ~pred))
    if tp + fp + fn == 0:
        return 1.0
    return tp / (tp + 0.5 * (fp + fn))


def evaluate_dataset(predictions, ground_truth_ranks) -> MetricReport:
    """Average the six metrics over aligned predictions and rank vectors.

    ``predictions`` yield (scores, positive_mask) pairs or objects with
    those attributes.  Undefined correlations and undefined Max-1 values
    are skipped per instance and counted; a metric undefined on every
    instance averages to NaN.  Sums are compensated (math.fsum) so the
    result does not depend on accumulation order.
    """
    preds = list(predictions)
    gts = list(ground_truth_ranks)
    if not preds or len(preds) != len(gts):
        raise ValueError("predictions and ground truths must align and be non-empty")
    per = {name: [] for name in ("tau_b", "rho", "gamma", "hl", "m1", "f1")}
    skipped = {"tau_b": 0, "rho": 0, "gamma": 0, "m1": 0}
    for pred, ranks in zip(preds, gts):
        if hasattr(pred, "scores"):
            scores, mask = pred.scores, pred.positive_mask
        else:
            scores, mask = pred
        scores = np.asarray(scores, dtype=float)
        mask = np.asarray(mask, dtype=bool)
        ranks = np.asarray(ranks, dtype=int)
        gt_pos = ranks > 0
        for name, fn, args in (
            ("tau_b", kendall_tau_b, (ranks, scores)),
            ("rho", spearman_rho, (ranks, scores)),
            ("gamma", goodman_kruskal_gamma, (ranks, scores)),
            ("m1", max1_error, (gt_pos, scores)),
        ):
            try:
                per[name].append(float(fn(*args)))
            except ValueError:
                skipped[name] += 1
        per["hl"].append(hamming_loss(gt_pos, mask))
        per["f1"].append(f1_score(gt_pos, mask))

    def mean(vals):
        return math.fsum(vals) / len(vals) if vals else float("nan")

    return MetricReport(
        tau_b=mean(per["tau_b"]),
        spearman_rho=mean(per["rho"]),
        gamma=mean(per["gamma"]),
        hamming_loss=mean(per["hl"]),
        max1=mean(per["m1"]),
        f1=mean(per["f1"]),
        n_instances=len(preds),
        skipped_tau_b=skipped["tau_b"],
        skipped_spearman_rho=skipped["rho"],
        skipped_gamma=skipped["gamma"],
        skipped_max1=skipped["m1"],
    )

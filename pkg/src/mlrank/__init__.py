"""mlrank: multi-label ranking with calibrated significance scores.

Implements the Gaussian significance objective (gmlr) alongside the
pairwise baselines crpc and lsep, the tie-aware ranking/classification
metrics used to compare them, deterministic synthetic ranked-dataset
generators, and a CLI harness for the behavioural experiments.
"""

from .baselines import (
    PairwiseLogits,
    ScoreThresholdHeads,
    crpc_loss,
    crpc_scores,
    lsep_class_loss,
    lsep_rank_loss,
)
from .buckets import (
    BucketOrder,
    RankedInstance,
    bucket_likelihood,
    bucket_likelihood_oracle,
    bucket_order_from_ranks,
    strict_pairs,
    weak_pairs,
)
from .gaussian import GaussianParam, diff_param, erf, log_q_prob, q_prob
from .gmlr import GaussianPrediction, LossValue, classification_loss, gmlr_objective, ranking_loss
from .metrics import (
    MetricReport,
    evaluate_dataset,
    f1_score,
    goodman_kruskal_gamma,
    hamming_loss,
    kendall_tau_b,
    max1_error,
    spearman_rho,
)
from .model import (
    AdamState,
    ModelParams,
    TrainConfig,
    TrainingDiverged,
    adam_step,
    backward,
    forward,
    init_model,
    load_checkpoint,
    predict_with,
    save_checkpoint,
    train,
)
from .predict import Prediction, predict_crpc, predict_gmlr, predict_lsep
from .synthgen import (
    CanvasConfig,
    GeneratedSample,
    generate_adjust_sequences,
    generate_calibration_set,
    generate_canvas_dataset,
    generate_feature_dataset,
    generate_small_variance_dataset,
    read_dataset_jsonl,
    write_dataset_jsonl,
)

__version__ = "0.1.0"

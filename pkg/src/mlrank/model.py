"""Fully connected model, exact gradients, Adam, and training loops.

The network is a plain MLP (affine layers with ReLU between them) whose
final layer width depends on the method: 2K for gmlr (means then
log-variances), 2K for lsep (scores then thresholds), (K+1)K/2 for crpc
(one logit per item pair including the virtual label).  Backpropagation
is written out explicitly so every loss gradient is exact and checkable
against finite differences.

Training is seeded and single-threaded: given the same dataset and
config it reproduces bit-identical parameters.  LSEP trains in two
stages; stage 2 updates only the threshold slice of the final layer, so
every other parameter is bit-identical to its stage-1 value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .baselines import (
    PairwiseLogits,
    ScoreThresholdHeads,
    crpc_augmented_order,
    crpc_loss,
    lsep_class_loss,
    lsep_rank_loss,
)
from .buckets import bucket_order_from_ranks, weak_bucket_order
from .gmlr import GaussianPrediction, gmlr_objective

METHODS = ("gmlr", "lsep", "crpc")
CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    """Raised when a batch loss turns non-finite."""

    def __init__(self, epoch: int, batch: int, param_norm: float):
        self.epoch = epoch
        self.batch = batch
        self.param_norm = param_norm
        super().__init__(
            f"non-finite loss at epoch {epoch}, batch {batch} (parameter norm {param_norm:.6g})"
        )


def head_width(method: str, num_classes: int) -> int:
    if method in ("gmlr", "lsep"):
        return 2 * num_classes
    if method == "crpc":
        return (num_classes + 1) * num_classes // 2
    raise ValueError(f"method must be one of {METHODS}")


@dataclass
class ModelParams:
    """Affine layer parameters; weights[i] has shape (in, out)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    head: str
    num_classes: int

    @property
    def input_dim(self) -> int:
        return int(self.weights[0].shape[0])

    @property
    def hidden(self) -> tuple[int, ...]:
        return tuple(int(w.shape[1]) for w in self.weights[:-1])

    def value_list(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            head=self.head,
            num_classes=self.num_classes,
        )


@dataclass
class TrainConfig:
    method: str = "gmlr"
    mode: str = "strong"
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-4
    weight_decay: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr_decay_per_epoch: float = 0.9
    seed: int = 0
    hidden: tuple[int, ...] = (64, 64)
    stage2_epochs: int | None = None
    early_stop: bool = False
    early_stop_patience: int = 5
    early_stop_rel_tol: float = 1e-5

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.mode not in ("weak", "strong"):
            raise ValueError("mode must be 'weak' or 'strong'")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("rates must be positive")
        if not 0 < self.lr_decay_per_epoch <= 1:
            raise ValueError("lr_decay_per_epoch must lie in (0, 1]")


def init_model(input_dim: int, num_classes: int, method: str, hidden=(64, 64), seed: int = 0) -> ModelParams:
    """Fan-in-scaled uniform weights, zero biases, from a dedicated stream."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0])))
    dims = [input_dim, *hidden, head_width(method, num_classes)]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(weights=weights, biases=biases, head=method, num_classes=num_classes)


def _forward_batch(params: ModelParams, x: np.ndarray):
    """Returns (head output, list of pre-activations, list of inputs per layer)."""
    if x.shape[-1] != params.input_dim:
        raise ValueError("feature length does not match first layer")
    h = x
    inputs, pre = [], []
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ w + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    return h, pre, inputs


def forward(params: ModelParams, features):
    """Single-instance forward pass returning the method's typed head."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 1:
        raise ValueError("features must be a 1-d vector")
    out, _, _ = _forward_batch(params, x[None, :])
    out = out[0]
    k = params.num_classes
    if params.head == "gmlr":
        return GaussianPrediction(mu=out[:k], log_var=out[k:])
    if params.head == "lsep":
        return ScoreThresholdHeads(scores=out[:k], thresholds=out[k:])
    return PairwiseLogits(values=out, num_classes=k)


def backward(params: ModelParams, features, head_grads, caches=None):
    """Gradients of sum_i <head_grads[i], out_i> w.r.t. every parameter.

    Returns [(dW, db), ...] aligned with the layers.  ``caches`` may
    carry (pre, inputs) from a matching forward pass to skip recompute.
    """
    x = np.asarray(features, dtype=float)
    g = np.asarray(head_grads, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
        g = g[None, :]
    if caches is None:
        _, pre, inputs = _forward_batch(params, x)
    else:
        pre, inputs = caches
    grads = [None] * len(params.weights)
    dz = g
    for i in range(len(params.weights) - 1, -1, -1):
        grads[i] = (inputs[i].T @ dz, dz.sum(axis=0))
        if i > 0:
            dh = dz @ params.weights[i].T
            dz = dh * (pre[i - 1] > 0)
    return grads


def _head_loss_and_grad(method, mode, stage, row, ranks, k, prep):
    if method == "gmlr":
        value = gmlr_objective(GaussianPrediction(row[:k], row[k:]), ranks, mode, order=prep)
        return value.total, np.concatenate([value.grad_mu, value.grad_log_var])
    if method == "crpc":
        loss, grad = crpc_loss(PairwiseLogits(row, k), ranks, mode, order=prep)
        return loss, grad
    heads = ScoreThresholdHeads(row[:k], row[k:])
    if stage == 1:
        loss, gf, gg = lsep_rank_loss(heads, ranks, mode, pairs=prep)
    else:
        loss, gf, gg = lsep_class_loss(heads, ranks)
    return loss, np.concatenate([gf, gg])


def batch_objective(params: ModelParams, x, ranks_matrix, method, mode, stage=1, prepared=None):
    """Mean per-instance loss over the batch plus parameter gradients.

    ``prepared`` optionally carries per-instance precomputed supervision
    structures (bucket orders or pair arrays) aligned with the batch.
    """
    x = np.asarray(x, dtype=float)
    ranks_matrix = np.asarray(ranks_matrix, dtype=int)
    out, pre, inputs = _forward_batch(params, x)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite network output")
    if params.head == "gmlr":
        sigma = np.exp(0.5 * out[:, params.num_classes :])
        if not np.all(np.isfinite(sigma)) or not np.all(sigma > 0):
            raise FloatingPointError("variance head overflow")
    n = x.shape[0]
    k = params.num_classes
    head_grads = np.zeros_like(out)
    total = 0.0
    for i in range(n):
        prep = prepared[i] if prepared is not None else None
        loss, grad = _head_loss_and_grad(method, mode, stage, out[i], ranks_matrix[i], k, prep)
        total += loss
        head_grads[i] = grad
    grads = backward(params, x, head_grads / n, caches=(pre, inputs))
    return total / n, grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_values(cls, values) -> "AdamState":
        return cls(m=[np.zeros_like(v) for v in values], v=[np.zeros_like(v) for v in values])


def adam_step(values, grads, state: AdamState, lr, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
    """One in-place Adam update with bias correction and coupled L2 decay."""
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for val, g, m, v in zip(values, grads, state.m, state.v):
        g = g + weight_decay * val
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        val -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return values, state


def _prepare_supervision(method, mode, stage, ranks_matrix, num_classes):
    if method == "gmlr":
        build = bucket_order_from_ranks if mode == "strong" else weak_bucket_order
        return [build(r) for r in ranks_matrix]
    if method == "crpc" and mode == "strong":
        return [crpc_augmented_order(r, num_classes) for r in ranks_matrix]
    if method == "lsep" and stage == 1:
        build = bucket_order_from_ranks if mode == "strong" else weak_bucket_order
        return [build(r).pair_arrays() for r in ranks_matrix]
    return None


def _run_stage(params, x, ranks_matrix, cfg: TrainConfig, stage, epochs, values, rng, log, epoch_offset):
    n = x.shape[0]
    prepared = _prepare_supervision(cfg.method, cfg.mode, stage, ranks_matrix, params.num_classes)
    state = AdamState.for_values(values)
    grads_slice = _grad_selector(params, cfg.method, stage)
    stall = 0
    prev_loss = None
    for epoch in range(epochs):
        lr = cfg.learning_rate * cfg.lr_decay_per_epoch ** epoch
        perm = rng.permutation(n)
        epoch_sum = 0.0
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = perm[start : start + cfg.batch_size]
            batch_prep = [prepared[j] for j in idx] if prepared is not None else None
            try:
                loss, grads = batch_objective(
                    params, x[idx], ranks_matrix[idx], cfg.method, cfg.mode, stage, batch_prep
                )
            except FloatingPointError:
                loss, grads = float("nan"), None
            if not np.isfinite(loss):
                norm = float(np.sqrt(sum(float(np.sum(v * v)) for v in params.value_list())))
                raise TrainingDiverged(epoch=epoch_offset + epoch, batch=b, param_norm=norm)
            adam_step(
                values,
                grads_slice(grads),
                state,
                lr,
                cfg.beta1,
                cfg.beta2,
                cfg.eps,
                cfg.weight_decay,
            )
            epoch_sum += loss * len(idx)
        epoch_loss = epoch_sum / n
        log.append((epoch_offset + epoch, stage, epoch_loss, lr))
        if cfg.early_stop and prev_loss is not None:
            rel = (prev_loss - epoch_loss) / max(abs(prev_loss), 1e-30)
            stall = stall + 1 if rel < cfg.early_stop_rel_tol else 0
            if stall >= cfg.early_stop_patience:
                break
        prev_loss = epoch_loss
    return epoch_offset + epochs


def _grad_selector(params: ModelParams, method, stage):
    """Maps full gradient lists to the stage's trainable value list."""
    if method == "lsep" and stage == 2:
        k = params.num_classes

        def select(grads):
            dw, db = grads[-1]
            return [dw[:, k:], db[k:]]

        return select
    return lambda grads: [g for dw_db in grads for g in dw_db]


def _stage_values(params: ModelParams, method, stage):
    if method == "lsep" and stage == 2:
        k = params.num_classes
        # Views into the final layer: only the threshold slice trains.
        return [params.weights[-1][:, k:], params.biases[-1][k:]]
    return params.value_list()


def train(dataset, cfg: TrainConfig, init_params: ModelParams | None = None):
    """Train a model on RankedInstance records; returns (params, log).

    The log holds (epoch, stage, mean per-instance loss, learning rate)
    rows.  GMLR and CRPC train in a single stage; LSEP trains the
    ranking loss first, then only the threshold head on the
    classification loss.
    """
    data = list(dataset)
    if not data:
        raise ValueError("dataset must be non-empty")
    x = np.stack([inst.features for inst in data])
    ranks_matrix = np.stack([inst.ranks for inst in data])
    num_classes = ranks_matrix.shape[1]
    if init_params is None:
        params = init_model(x.shape[1], num_classes, cfg.method, cfg.hidden, cfg.seed)
    else:
        params = init_params.copy()
    if params.head != cfg.method or params.num_classes != num_classes:
        raise ValueError("initial parameters do not match method or class count")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 1])))
    log: list[tuple[int, int, float, float]] = []
    offset = _run_stage(
        params, x, ranks_matrix, cfg, 1, cfg.epochs, _stage_values(params, cfg.method, 1),
        rng, log, 0,
    )
    if cfg.method == "lsep":
        stage2 = cfg.epochs if cfg.stage2_epochs is None else cfg.stage2_epochs
        _run_stage(
            params, x, ranks_matrix, cfg, 2, stage2, _stage_values(params, cfg.method, 2),
            rng, log, offset,
        )
    return params, log


def predict_with(params: ModelParams, features):
    """Forward pass plus the method's bipartition and rank assignment."""
    from .predict import predict_crpc, predict_gmlr, predict_lsep

    head_out = forward(params, features)
    if params.head == "gmlr":
        return predict_gmlr(head_out)
    if params.head == "lsep":
        return predict_lsep(head_out)
    return predict_crpc(head_out)


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(path, params: ModelParams, meta: dict | None = None) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "head": params.head,
        "num_classes": params.num_classes,
        "input_dim": params.input_dim,
        "hidden": list(params.hidden),
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "meta": meta or {},
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    params = ModelParams(
        weights=[np.asarray(w, dtype=float) for w in doc["weights"]],
        biases=[np.asarray(b, dtype=float) for b in doc["biases"]],
        head=doc["head"],
        num_classes=int(doc["num_classes"]),
    )
    expected = head_width(params.head, params.num_classes)
    if params.weights[-1].shape[1] != expected:
        raise ValueError("checkpoint head width does not match its method")
    return params, doc.get("meta", {})

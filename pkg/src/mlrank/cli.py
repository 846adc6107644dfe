"""Command-line harness: dataset generation, training, evaluation, and
the behavioural experiments.

Every command takes a declarative JSON config (``--config``) whose keys
individual flags may override, requires an output directory, and writes
a ``resolved_config.json`` echo next to its outputs; re-running any
command with the same resolved config and seed reproduces its output
files byte for byte.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric abort.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys

import numpy as np

from .metrics import evaluate_dataset
from .model import (
    TrainConfig,
    TrainingDiverged,
    forward,
    load_checkpoint,
    predict_with,
    save_checkpoint,
    train,
)
from .synthgen import (
    CALIBRATION_SCALES,
    CanvasConfig,
    dump_images,
    generate_adjust_sequences,
    generate_calibration_set,
    generate_canvas_dataset,
    generate_feature_dataset,
    generate_small_variance_dataset,
    read_dataset_jsonl,
    write_dataset_jsonl,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return cfg


def _merge_flags(cfg: dict, args, keys) -> dict:
    merged = dict(cfg)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _require(cfg: dict, key: str):
    if cfg.get(key) is None:
        raise UsageError(f"missing required setting '{key}' (config key or flag)")
    return cfg[key]


def _out_dir(cfg: dict) -> str:
    out = _require(cfg, "out")
    os.makedirs(out, exist_ok=True)
    return out


def _write_echo(out: str, command: str, resolved: dict) -> None:
    doc = {"command": command, **resolved}
    with open(os.path.join(out, "resolved_config.json"), "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _canvas_config(d: dict, seed: int) -> CanvasConfig:
    fields = {f.name for f in dataclasses.fields(CanvasConfig)}
    unknown = set(d) - fields
    if unknown:
        raise UsageError(f"unknown canvas config keys: {sorted(unknown)}")
    kwargs = dict(d)
    for key in ("digit_count_range", "scale_range", "brightness_range"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    kwargs["seed"] = seed
    return CanvasConfig(**kwargs)


def _train_config(cfg: dict) -> TrainConfig:
    fields = {f.name for f in dataclasses.fields(TrainConfig)}
    kwargs = {k: v for k, v in cfg.items() if k in fields}
    if "hidden" in kwargs:
        kwargs["hidden"] = tuple(kwargs["hidden"])
    return TrainConfig(**kwargs)


def _load_model_and_data(cfg):
    params, meta = load_checkpoint(_require(cfg, "checkpoint"))
    header, instances = read_dataset_jsonl(_require(cfg, "dataset"))
    if int(header["k"]) != params.num_classes:
        raise ValueError(
            f"class-count mismatch: checkpoint has {params.num_classes}, dataset has {header['k']}"
        )
    if int(header["d"]) != params.input_dim:
        raise ValueError(
            f"feature-length mismatch: checkpoint expects {params.input_dim}, dataset has {header['d']}"
        )
    return params, meta, header, instances


def _warn_setup_mismatch(meta: dict, canvas: CanvasConfig) -> None:
    trained = meta.get("trained_on", {})
    setup = trained.get("canvas", {}).get("setup") if isinstance(trained, dict) else None
    if setup is not None and setup != canvas.setup:
        print(
            f"warning: checkpoint was trained on setup {setup!r}, experiment uses {canvas.setup!r}",
            file=sys.stderr,
        )


# ---------------------------------------------------------------------------
# Commands


def cmd_generate(args) -> int:
    cfg = _merge_flags(_load_config(args.config), args, ("seed", "out", "n", "kind"))
    if args.dump_images:
        cfg["dump_images"] = True
    seed = int(_require(cfg, "seed"))
    n = int(_require(cfg, "n"))
    kind = cfg.get("kind", "canvas")
    out = _out_dir(cfg)
    resolved: dict = {"kind": kind, "n": n, "seed": seed, "out": out}
    if kind in ("canvas", "small-variance"):
        canvas = _canvas_config(cfg.get("canvas", {}), seed)
        generator = generate_small_variance_dataset if kind == "small-variance" else generate_canvas_dataset
        samples = generator(canvas, n)
        instances = [s.to_instance() for s in samples]
        resolved["canvas"] = canvas.to_dict()
        if cfg.get("dump_images"):
            dump_images(os.path.join(out, "images"), samples, canvas)
            resolved["dump_images"] = True
    elif kind == "feature":
        fdict = dict(cfg.get("feature", {}))
        fdict.setdefault("num_classes", 6)
        fdict.setdefault("dim", 24)
        fdict.setdefault("factor_range", (0.5, 3.0))
        fdict.setdefault("noise", 0.05)
        instances = generate_feature_dataset(
            num_classes=int(fdict["num_classes"]),
            dim=int(fdict["dim"]),
            n=n,
            factor_range=tuple(fdict["factor_range"]),
            seed=seed,
            noise=float(fdict["noise"]),
        )
        resolved["feature"] = {
            "num_classes": int(fdict["num_classes"]),
            "dim": int(fdict["dim"]),
            "factor_range": list(tuple(fdict["factor_range"])),
            "noise": float(fdict["noise"]),
        }
    else:
        raise UsageError(f"unknown dataset kind {kind!r}")
    write_dataset_jsonl(os.path.join(out, "dataset.jsonl"), instances, generator=resolved)
    _write_echo(out, "generate", resolved)
    print(f"wrote {len(instances)} instances to {os.path.join(out, 'dataset.jsonl')}")
    return 0


def cmd_train(args) -> int:
    cfg = _merge_flags(
        _load_config(args.config),
        args,
        ("seed", "out", "dataset", "method", "mode", "epochs", "batch_size", "learning_rate"),
    )
    seed = int(_require(cfg, "seed"))
    cfg["seed"] = seed
    out = _out_dir(cfg)
    header, instances = read_dataset_jsonl(_require(cfg, "dataset"))
    tc = _train_config(cfg)
    params, log = train(instances, tc)
    meta = {
        "mode": tc.mode,
        "train_config": dataclasses.asdict(tc),
        "trained_on": header.get("generator", {}),
    }
    save_checkpoint(os.path.join(out, "checkpoint.json"), params, meta)
    _write_csv(
        os.path.join(out, "loss_log.csv"),
        ["epoch", "stage", "loss", "lr"],
        [(e, s, repr(l), repr(lr)) for e, s, l, lr in log],
    )
    resolved = {"dataset": cfg["dataset"], "out": out, **dataclasses.asdict(tc)}
    resolved["hidden"] = list(tc.hidden)
    _write_echo(out, "train", resolved)
    print(f"trained {tc.method}/{tc.mode} for {len(log)} epochs; checkpoint in {out}")
    return 0


_METRIC_COLUMNS = ("tau_b", "s_rho", "gamma", "hl", "m1", "f1")


def cmd_eval(args) -> int:
    cfg = _merge_flags(_load_config(args.config), args, ("out", "checkpoint", "dataset"))
    if args.raw:
        cfg["raw"] = True
    raw = bool(cfg.get("raw", False))
    out = _out_dir(cfg)
    params, _, _, instances = _load_model_and_data(cfg)
    preds = [predict_with(params, inst.features) for inst in instances]
    report = evaluate_dataset(preds, [inst.ranks for inst in instances])
    scale = 1.0 if raw else 100.0
    values = [
        report.tau_b * scale,
        report.spearman_rho * scale,
        report.gamma * scale,
        report.hamming_loss * scale,
        report.max1 * scale,
        report.f1 * scale,
    ]
    row = (
        [report.n_instances]
        + [repr(v) for v in values]
        + [report.skipped_tau_b, report.skipped_spearman_rho, report.skipped_gamma, report.skipped_max1]
    )
    header = (
        ["n_instances"]
        + list(_METRIC_COLUMNS)
        + ["skipped_tau_b", "skipped_s_rho", "skipped_gamma", "skipped_m1"]
    )
    _write_csv(os.path.join(out, "metrics.csv"), header, [row])
    resolved = {"checkpoint": cfg["checkpoint"], "dataset": cfg["dataset"], "out": out, "raw": raw}
    _write_echo(out, "eval", resolved)
    print(", ".join(f"{k}={v}" for k, v in zip(header, row)))
    return 0


def cmd_adjust_exp(args) -> int:
    cfg = _merge_flags(_load_config(args.config), args, ("seed", "out", "checkpoint"))
    seed = int(_require(cfg, "seed"))
    out = _out_dir(cfg)
    params, meta = load_checkpoint(_require(cfg, "checkpoint"))
    canvas = _canvas_config(cfg.get("canvas", {}), seed)
    _warn_setup_mismatch(meta, canvas)
    if canvas.feature_length != params.input_dim:
        raise ValueError(
            f"feature-length mismatch: checkpoint expects {params.input_dim}, canvas yields {canvas.feature_length}"
        )
    n_sequences = int(cfg.get("n_sequences", 50))
    steps = int(cfg.get("steps", 50))
    sequences = generate_adjust_sequences(canvas, n_sequences=n_sequences, steps=steps)
    sums = np.zeros((steps, 3))
    for seq in sequences:
        for si, sample in enumerate(seq.samples):
            scores = predict_with(params, sample.pixels).scores
            for role in range(3):
                sums[si, role] += scores[seq.digits[role]]
    means = sums / n_sequences
    rows = [
        (step + 1, repr(float(means[step, 0])), repr(float(means[step, 1])), repr(float(means[step, 2])))
        for step in range(steps)
    ]
    _write_csv(
        os.path.join(out, "adjust.csv"),
        ["step", "mean_score_low_digit", "mean_score_middle_digit", "mean_score_high_digit"],
        rows,
    )
    resolved = {
        "checkpoint": cfg["checkpoint"], "out": out, "seed": seed,
        "n_sequences": n_sequences, "steps": steps, "canvas": canvas.to_dict(),
    }
    _write_echo(out, "adjust-exp", resolved)
    print(f"wrote {steps} step rows to {os.path.join(out, 'adjust.csv')}")
    return 0


def cmd_calib_exp(args) -> int:
    cfg = _merge_flags(_load_config(args.config), args, ("seed", "out", "checkpoint"))
    seed = int(_require(cfg, "seed"))
    out = _out_dir(cfg)
    params, meta = load_checkpoint(_require(cfg, "checkpoint"))
    canvas = _canvas_config(cfg.get("canvas", {}), seed)
    _warn_setup_mismatch(meta, canvas)
    if canvas.feature_length != params.input_dim:
        raise ValueError(
            f"feature-length mismatch: checkpoint expects {params.input_dim}, canvas yields {canvas.feature_length}"
        )
    n = int(cfg.get("n", 50))
    samples = generate_calibration_set(canvas, n)
    collected: dict[float, list[float]] = {lv: [] for lv in CALIBRATION_SCALES}
    sigmas: dict[float, list[float]] = {lv: [] for lv in CALIBRATION_SCALES}
    for sample in samples:
        pred = predict_with(params, sample.pixels)
        sigma = None
        if params.head == "gmlr":
            sigma = forward(params, sample.pixels).sigma
        for pf in sample.factors:
            collected[pf.scale].append(float(pred.scores[pf.digit]))
            if sigma is not None:
                sigmas[pf.scale].append(float(sigma[pf.digit]))
    rows = []
    for lv in CALIBRATION_SCALES:
        vals = np.asarray(collected[lv])
        mean_sigma = float(np.mean(sigmas[lv])) if sigmas[lv] else float("nan")
        rows.append((lv, repr(float(np.mean(vals))), repr(float(np.std(vals, ddof=1))), repr(mean_sigma)))
    _write_csv(
        os.path.join(out, "calibration.csv"),
        ["level", "mean", "std", "mean_pred_sigma"],
        rows,
    )
    resolved = {
        "checkpoint": cfg["checkpoint"], "out": out, "seed": seed, "n": n,
        "canvas": canvas.to_dict(),
    }
    _write_echo(out, "calib-exp", resolved)
    print(f"wrote {len(rows)} level rows to {os.path.join(out, 'calibration.csv')}")
    return 0


def cmd_extract_sig(args) -> int:
    cfg = _merge_flags(
        _load_config(args.config), args, ("out", "checkpoint", "dataset", "class_index", "n_checkpoints")
    )
    out = _out_dir(cfg)
    params, _, header, instances = _load_model_and_data(cfg)
    class_index = int(_require(cfg, "class_index"))
    n_checkpoints = int(cfg.get("n_checkpoints", 10))
    if not 0 <= class_index < params.num_classes:
        raise ValueError(f"class index {class_index} out of range for {params.num_classes} classes")
    if n_checkpoints < 1 or n_checkpoints > len(instances):
        raise ValueError("n_checkpoints must lie in 1..n_instances")
    scores = np.asarray(
        [float(predict_with(params, inst.features).scores[class_index]) for inst in instances]
    )
    order = np.argsort(scores, kind="stable")
    n = len(instances)
    if n_checkpoints == 1:
        positions = [0]
    else:
        positions = [math.floor(i * (n - 1) / (n_checkpoints - 1)) for i in range(n_checkpoints)]
    rows = [
        (pos, int(order[pos]), repr(float(scores[order[pos]]))) for pos in positions
    ]
    _write_csv(
        os.path.join(out, "significance.csv"),
        ["sorted_position", "dataset_index", "score"],
        rows,
    )
    resolved = {
        "checkpoint": cfg["checkpoint"], "dataset": cfg["dataset"], "out": out,
        "class_index": class_index, "n_checkpoints": n_checkpoints,
    }
    _write_echo(out, "extract-sig", resolved)
    print(f"wrote {len(rows)} checkpoints to {os.path.join(out, 'significance.csv')}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="mlrank", description="Multi-label ranking toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="PRNG seed (overrides config)")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("generate", help="generate a synthetic ranked dataset")
    common(p)
    p.add_argument("--n", type=int, help="number of instances")
    p.add_argument("--kind", choices=("canvas", "feature", "small-variance"))
    p.add_argument("--dump-images", action="store_true", dest="dump_images")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a model on a JSONL dataset")
    common(p)
    p.add_argument("--dataset")
    p.add_argument("--method", choices=("gmlr", "lsep", "crpc"))
    p.add_argument("--mode", choices=("weak", "strong"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--raw", action="store_true", help="emit [0,1] scale instead of x100")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("adjust-exp", help="averaged scores along factor sweeps")
    common(p)
    p.add_argument("--checkpoint")
    p.set_defaults(func=cmd_adjust_exp)

    p = sub.add_parser("calib-exp", help="score statistics per significance level")
    common(p)
    p.add_argument("--checkpoint")
    p.set_defaults(func=cmd_calib_exp)

    p = sub.add_parser("extract-sig", help="equidistant checkpoints along one class's scores")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--dataset")
    p.add_argument("--class-index", type=int, dest="class_index")
    p.add_argument("--n-checkpoints", type=int, dest="n_checkpoints")
    p.set_defaults(func=cmd_extract_sig)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except TrainingDiverged as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

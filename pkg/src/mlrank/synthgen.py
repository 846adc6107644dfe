"""Deterministic synthetic ranked-dataset generators.

Canvas datasets place unique stroke digits (or IDX-loaded glyphs) on a
square canvas; an importance factor (digit scale or brightness) induces
the ground-truth ranks.  Setups: "S" varies scale only, "B" brightness
only, "S-mix"/"B-mix" vary both but rank by the named factor alone.  A
fast feature-space generator provides a linear surrogate for loss and
training studies.  Sequence and calibration generators build the probe
sets for the behavioural experiments.

All randomness flows through numpy's PCG64 generator seeded from the
config, so a (config, seed, n) triple reproduces byte-identical output
everywhere.  Canvas pixels are rounded to 3 decimals before leaving the
generator, which keeps the JSONL dumps compact; JSON round-trips floats
exactly, so files and in-memory datasets always agree.

JSONL dataset layout (also the loader contract for external data):
the first line is a header object {"k": classes, "d": feature length,
"generator": config echo}; every following line is one instance
{"features": [...], "ranks": [...]} with 0-based class positions.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .buckets import RankedInstance
from .glyphs import GlyphBank, builtin_bank, hsv_to_rgb, load_idx_glyphs

SETUPS = ("S", "B", "S-mix", "B-mix")
CALIBRATION_SCALES = (1.0, 1.5, 2.0, 2.5)


@dataclass(frozen=True)
class CanvasConfig:
    canvas_size: int = 64
    num_classes: int = 10
    digit_count_range: tuple[int, int] = (1, 10)
    scale_range: tuple[float, float] = (1.0, 3.0)
    brightness_range: tuple[float, float] = (0.0, 1.0)
    color_mode: str = "gray"
    setup: str = "S"
    glyph_source: str = "builtin"
    seed: int = 0
    glyph_size: int = 16
    brightness_floor: float = 0.05
    idx_images: str | None = None
    idx_labels: str | None = None

    def __post_init__(self):
        if self.setup not in SETUPS:
            raise ValueError(f"setup must be one of {SETUPS}")
        if self.color_mode not in ("gray", "color"):
            raise ValueError("color_mode must be 'gray' or 'color'")
        if self.glyph_source not in ("builtin", "idx-file"):
            raise ValueError("glyph_source must be 'builtin' or 'idx-file'")
        if not 1 <= self.num_classes <= 10:
            raise ValueError("num_classes must be within 1..10")
        lo, hi = self.digit_count_range
        if not 1 <= lo <= hi <= self.num_classes:
            raise ValueError("digit_count_range must satisfy 1 <= lo <= hi <= num_classes")
        if self.scale_range[0] < 1.0 or self.scale_range[0] > self.scale_range[1]:
            raise ValueError("scale_range must satisfy 1 <= lo <= hi")
        blo, bhi = self.brightness_range
        if not (0.0 <= blo <= bhi <= 1.0):
            raise ValueError("brightness_range must lie within [0, 1]")
        if self.glyph_size < 4:
            raise ValueError("glyph_size must be at least 4")
        max_scale = self.scale_range[1] if self.uses_scale else 1.0
        if int(round(self.glyph_size * max_scale)) > self.canvas_size:
            raise ValueError(
                "placement infeasible: glyph_size * max scale exceeds canvas_size"
            )

    @property
    def uses_scale(self) -> bool:
        return self.setup in ("S", "S-mix", "B-mix")

    @property
    def uses_brightness(self) -> bool:
        return self.setup in ("B", "S-mix", "B-mix")

    @property
    def ranked_factor(self) -> str:
        return "scale" if self.setup.startswith("S") else "brightness"

    @property
    def channels(self) -> int:
        return 3 if self.color_mode == "color" else 1

    @property
    def feature_length(self) -> int:
        return self.canvas_size * self.canvas_size * self.channels

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class DigitFactors:
    digit: int
    scale: float
    brightness: float
    top: int
    left: int
    hue: float | None = None
    saturation: float | None = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if self.hue is None:
            d.pop("hue")
            d.pop("saturation")
        return d


@dataclass(frozen=True)
class GeneratedSample:
    pixels: np.ndarray
    ranks: np.ndarray
    factors: tuple[DigitFactors, ...]

    def to_instance(self) -> RankedInstance:
        return RankedInstance(features=self.pixels, ranks=self.ranks)


@dataclass(frozen=True)
class AdjustSequence:
    """One probe sequence: the swept digits (low, middle, high roles) and
    the per-step samples."""

    digits: tuple[int, int, int]
    samples: tuple[GeneratedSample, ...]


def _glyph_bank(cfg: CanvasConfig) -> GlyphBank:
    if cfg.glyph_source == "builtin":
        return builtin_bank()
    if not cfg.idx_images or not cfg.idx_labels:
        raise ValueError("glyph source unavailable: idx-file requires idx_images and idx_labels")
    return load_idx_glyphs(cfg.idx_images, cfg.idx_labels)


def _ranks_from_factors(num_classes: int, digits, factors) -> np.ndarray:
    """Dense positive ranks 1..m by ascending factor; exact factor ties
    break by ascending digit index."""
    ranks = np.zeros(num_classes, dtype=int)
    order = sorted(range(len(digits)), key=lambda i: (factors[i], digits[i]))
    for rank, i in enumerate(order, start=1):
        ranks[digits[i]] = rank
    return ranks


def _sample_brightness(cfg: CanvasConfig, rng) -> float:
    b = float(rng.uniform(cfg.brightness_range[0], cfg.brightness_range[1]))
    return max(b, cfg.brightness_floor)


def _compose(cfg: CanvasConfig, bank: GlyphBank, placed: list[DigitFactors], rng=None):
    """Render placed digits onto a fresh canvas (max compositing)."""
    size = cfg.canvas_size
    if cfg.color_mode == "color":
        canvas = np.zeros((size, size, 3))
    else:
        canvas = np.zeros((size, size))
    rng = rng if rng is not None else np.random.default_rng(0)
    for pf in placed:
        px = max(4, int(round(cfg.glyph_size * pf.scale)))
        glyph = bank.render(pf.digit, px, rng) * pf.brightness
        region = (slice(pf.top, pf.top + px), slice(pf.left, pf.left + px))
        if cfg.color_mode == "color":
            patch = hsv_to_rgb(pf.hue, pf.saturation, glyph)
            canvas[region] = np.maximum(canvas[region], patch)
        else:
            canvas[region] = np.maximum(canvas[region], glyph)
    return np.round(canvas, 3).reshape(-1)


def _place(cfg: CanvasConfig, rng, scale: float) -> tuple[int, int]:
    px = max(4, int(round(cfg.glyph_size * scale)))
    top = int(rng.integers(0, cfg.canvas_size - px + 1))
    left = int(rng.integers(0, cfg.canvas_size - px + 1))
    return top, left


def _one_canvas_sample(cfg: CanvasConfig, bank: GlyphBank, rng) -> GeneratedSample:
    lo, hi = cfg.digit_count_range
    count = int(rng.integers(lo, hi + 1))
    digits = [int(d) for d in rng.choice(cfg.num_classes, size=count, replace=False)]
    placed = []
    for digit in digits:
        scale = float(rng.uniform(*cfg.scale_range)) if cfg.uses_scale else 1.0
        brightness = _sample_brightness(cfg, rng) if cfg.uses_brightness else 1.0
        hue = float(rng.uniform()) if cfg.color_mode == "color" else None
        sat = float(rng.uniform()) if cfg.color_mode == "color" else None
        top, left = _place(cfg, rng, scale)
        placed.append(
            DigitFactors(
                digit=digit, scale=scale, brightness=brightness,
                top=top, left=left, hue=hue, saturation=sat,
            )
        )
    key = cfg.ranked_factor
    factor_values = [getattr(pf, key) for pf in placed]
    if len(set(factor_values)) != len(factor_values):
        raise RuntimeError("tied importance factors; ranks would not be dense")
    ranks = _ranks_from_factors(cfg.num_classes, digits, factor_values)
    pixels = _compose(cfg, bank, placed, rng)
    return GeneratedSample(pixels=pixels, ranks=ranks, factors=tuple(placed))


def generate_canvas_dataset(cfg: CanvasConfig, n: int) -> list[GeneratedSample]:
    """n canvas samples; digit count uniform over the configured range,
    digits unique per image, ranks induced by the setup's named factor."""
    bank = _glyph_bank(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    return [_one_canvas_sample(cfg, bank, rng) for _ in range(n)]


def generate_small_variance_dataset(cfg: CanvasConfig, n: int) -> list[GeneratedSample]:
    """Scale-ranked canvas dataset with the scale range narrowed to [1, 1.5]."""
    if not cfg.setup.startswith("S"):
        raise ValueError("setup mismatch: small-variance dataset requires a scale-ranked setup")
    return generate_canvas_dataset(dataclasses.replace(cfg, scale_range=(1.0, 1.5)), n)


def generate_calibration_set(cfg: CanvasConfig, n: int = 50) -> list[GeneratedSample]:
    """Samples with exactly 4 positive digits whose scales are a random
    bijection onto {1.0, 1.5, 2.0, 2.5}; ranks follow the scale levels."""
    if not cfg.setup.startswith("S"):
        raise ValueError("setup mismatch: calibration requires a scale-ranked setup")
    if int(round(cfg.glyph_size * max(CALIBRATION_SCALES))) > cfg.canvas_size:
        raise ValueError("placement infeasible: calibration scales exceed canvas_size")
    bank = _glyph_bank(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    samples = []
    for _ in range(n):
        digits = [int(d) for d in rng.choice(cfg.num_classes, size=4, replace=False)]
        scales = [CALIBRATION_SCALES[int(i)] for i in rng.permutation(4)]
        placed = []
        for digit, scale in zip(digits, scales):
            hue = float(rng.uniform()) if cfg.color_mode == "color" else None
            sat = float(rng.uniform()) if cfg.color_mode == "color" else None
            top, left = _place(cfg, rng, scale)
            placed.append(
                DigitFactors(
                    digit=digit, scale=scale, brightness=1.0,
                    top=top, left=left, hue=hue, saturation=sat,
                )
            )
        ranks = _ranks_from_factors(cfg.num_classes, digits, scales)
        samples.append(
            GeneratedSample(pixels=_compose(cfg, bank, placed, rng), ranks=ranks, factors=tuple(placed))
        )
    return samples


def generate_adjust_sequences(
    cfg: CanvasConfig, n_sequences: int = 50, steps: int = 50
) -> list[AdjustSequence]:
    """Probe sequences of 3 digits at fixed positions whose named factors
    sweep linearly: the low digit from the range minimum to its maximum,
    the high digit the opposite way, the middle digit constant."""
    if steps < 2:
        raise ValueError("steps must be at least 2")
    bank = _glyph_bank(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    if cfg.ranked_factor == "scale":
        lo, hi = cfg.scale_range
    else:
        lo, hi = max(cfg.brightness_range[0], cfg.brightness_floor), cfg.brightness_range[1]
    mid = 0.5 * (lo + hi)
    sequences = []
    for _ in range(n_sequences):
        digits = tuple(int(d) for d in rng.choice(cfg.num_classes, size=3, replace=False))
        colors = []
        positions = []
        for role_max in (hi, mid, hi):  # largest sweep extent per role
            hue = float(rng.uniform()) if cfg.color_mode == "color" else None
            sat = float(rng.uniform()) if cfg.color_mode == "color" else None
            colors.append((hue, sat))
            positions.append(_place(cfg, rng, role_max if cfg.ranked_factor == "scale" else 1.0))
        samples = []
        for step in range(steps):
            t = step / (steps - 1)
            factors = (lo + t * (hi - lo), mid, hi - t * (hi - lo))
            placed = []
            for (digit, factor, (hue, sat), (top, left)) in zip(digits, factors, colors, positions):
                scale = factor if cfg.ranked_factor == "scale" else 1.0
                brightness = factor if cfg.ranked_factor == "brightness" else 1.0
                placed.append(
                    DigitFactors(
                        digit=digit, scale=scale, brightness=brightness,
                        top=top, left=left, hue=hue, saturation=sat,
                    )
                )
            ranks = _ranks_from_factors(cfg.num_classes, digits, factors)
            samples.append(
                GeneratedSample(pixels=_compose(cfg, bank, placed), ranks=ranks, factors=tuple(placed))
            )
        sequences.append(AdjustSequence(digits=digits, samples=tuple(samples)))
    return sequences


def generate_feature_dataset(
    num_classes: int,
    dim: int,
    n: int,
    factor_range: tuple[float, float] = (0.5, 3.0),
    seed: int = 0,
    noise: float = 0.05,
) -> list[RankedInstance]:
    """Linear surrogate dataset: every class owns a fixed random unit
    direction; an instance is the sum of factor * direction over its
    present classes plus Gaussian noise, ranked by factor.

    Class presence is a uniform random subset, redrawn when empty so
    every instance has at least one positive.
    """
    if dim < num_classes:
        raise ValueError("dim must be at least num_classes")
    if factor_range[0] <= 0 or factor_range[0] >= factor_range[1]:
        raise ValueError("factor_range must satisfy 0 < lo < hi")
    rng = np.random.Generator(np.random.PCG64(seed))
    directions = rng.standard_normal((num_classes, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    instances = []
    for _ in range(n):
        mask = rng.integers(0, 2, size=num_classes).astype(bool)
        while not mask.any():
            mask = rng.integers(0, 2, size=num_classes).astype(bool)
        factors = rng.uniform(factor_range[0], factor_range[1], size=num_classes) * mask
        features = factors @ directions
        if noise:
            features = features + noise * rng.standard_normal(dim)
        present = np.flatnonzero(mask)
        values = factors[present]
        if len(set(values.tolist())) != len(values):
            raise RuntimeError("tied factors; ranks would not be dense")
        ranks = _ranks_from_factors(num_classes, present.tolist(), values.tolist())
        instances.append(RankedInstance(features=features, ranks=ranks))
    return instances


# ---------------------------------------------------------------------------
# Serialization


def write_dataset_jsonl(path, instances, generator: dict | None = None) -> None:
    """Write instances as JSONL behind a {"k", "d", "generator"} header."""
    instances = list(instances)
    if not instances:
        raise ValueError("refusing to write an empty dataset")
    k = int(instances[0].ranks.size)
    d = int(instances[0].features.size)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        header = {"k": k, "d": d, "generator": generator or {}}
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for inst in instances:
            if inst.ranks.size != k or inst.features.size != d:
                raise ValueError("inconsistent instance shapes")
            row = {
                "features": inst.features.tolist(),
                "ranks": inst.ranks.tolist(),
            }
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def read_dataset_jsonl(path) -> tuple[dict, list[RankedInstance]]:
    """Read a JSONL dataset; returns (header, instances)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    header = json.loads(lines[0])
    for key in ("k", "d"):
        if key not in header:
            raise ValueError(f"{path}: header missing '{key}'")
    k, d = int(header["k"]), int(header["d"])
    instances = []
    for lineno, line in enumerate(lines[1:], start=2):
        row = json.loads(line)
        feats = np.asarray(row["features"], dtype=float)
        ranks = np.asarray(row["ranks"], dtype=int)
        if feats.size != d or ranks.size != k:
            raise ValueError(f"{path}:{lineno}: instance shape does not match header")
        instances.append(RankedInstance(features=feats, ranks=ranks))
    if not instances:
        raise ValueError(f"{path}: dataset has a header but no instances")
    return header, instances


def write_pgm(path, img: np.ndarray) -> None:
    """Binary PGM (P5) from a 2-d array in [0, 1]."""
    data = np.clip(np.round(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_ppm(path, img: np.ndarray) -> None:
    """Binary PPM (P6) from an (h, w, 3) array in [0, 1]."""
    data = np.clip(np.round(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    h, w, _ = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def dump_images(directory, samples, cfg: CanvasConfig) -> None:
    """One PGM/PPM per sample plus a labels.jsonl sidecar with ranks and
    the per-digit factor records."""
    import os

    os.makedirs(directory, exist_ok=True)
    sidecar = os.path.join(directory, "labels.jsonl")
    with open(sidecar, "w", encoding="ascii", newline="\n") as fh:
        for i, sample in enumerate(samples):
            if cfg.color_mode == "color":
                img = sample.pixels.reshape(cfg.canvas_size, cfg.canvas_size, 3)
                name = f"{i:05d}.ppm"
                write_ppm(os.path.join(directory, name), img)
            else:
                img = sample.pixels.reshape(cfg.canvas_size, cfg.canvas_size)
                name = f"{i:05d}.pgm"
                write_pgm(os.path.join(directory, name), img)
            row = {
                "image": name,
                "ranks": sample.ranks.tolist(),
                "factors": [pf.to_dict() for pf in sample.factors],
            }
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")

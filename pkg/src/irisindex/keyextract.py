"""Key-portion selection, quality filtering, range normalization, smoothing and per-eye averaging."""

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DataError
from .model import (
    KEY_COLS,
    KEY_ROWS,
    NORM_COLS,
    KeyPortion,
    NormalizedIris,
    QualityReport,
    Reason,
    Stage,
    format_label,
)

MAX_KERNEL = 15


@dataclass(frozen=True)
class PreprocessConfig:
    mad_span: float = 3.5
    saturation_threshold_count: int = 5
    saturation_level: float = 0.98
    mad_min: float = 0.01
    mad_max: float = 0.25
    kernel_size: int = 5
    angular_offset_cols: int = 0

    def __post_init__(self):
        if not self.mad_span > 0:
            raise ValueError("mad_span must be positive")
        if self.saturation_threshold_count < 0:
            raise ValueError("saturation_threshold_count must be >= 0")
        if not 0 < self.saturation_level <= 1:
            raise ValueError("saturation_level must lie in (0, 1]")
        if not 0 <= self.mad_min < self.mad_max:
            raise ValueError("need 0 <= mad_min < mad_max")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0 or self.kernel_size > MAX_KERNEL:
            raise ValueError(f"kernel_size must be odd and in [1, {MAX_KERNEL}]")
        if not 0 <= self.angular_offset_cols < NORM_COLS:
            raise ValueError(f"angular_offset_cols must be in [0, {NORM_COLS})")


def extract_key(norm: NormalizedIris, offset_cols: int = 0) -> KeyPortion:
    """Rows 0..15 and columns offset..offset+255 (wrapping) of a normalized iris."""
    if not 0 <= offset_cols < NORM_COLS:
        raise DataError(f"offset_cols must be in [0, {NORM_COLS}), got {offset_cols}")
    cols = (offset_cols + np.arange(KEY_COLS)) % NORM_COLS
    block = norm.pixels[:KEY_ROWS, cols]
    return KeyPortion(block.ravel(), norm.label, norm.sample_id, Stage.RAW)


def mad_stats(values):
    """Return ``(median, median absolute deviation)``."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise DataError("mad_stats of an empty vector")
    med = float(np.median(v))
    mad = float(np.median(np.abs(v - med)))
    return med, mad


def quality_filter(key: KeyPortion, cfg: PreprocessConfig = PreprocessConfig()) -> QualityReport:
    """Saturation check first, then MAD range; rejection is reported, never raised."""
    saturated = int(np.count_nonzero(key.values >= cfg.saturation_level))
    _, mad = mad_stats(key.values)
    if saturated > cfg.saturation_threshold_count:
        reason = Reason.SATURATION_EXCEEDED
    elif not cfg.mad_min <= mad <= cfg.mad_max:
        reason = Reason.MAD_OUT_OF_RANGE
    else:
        reason = Reason.OK
    return QualityReport(reason is Reason.OK, reason, saturated, mad, key.sample_id)


def normalize_range(key: KeyPortion, mad_span: float = 3.5) -> np.ndarray:
    """Map median -> 0.5 and median +/- mad_span*MAD -> 1 / 0, clamping outside the span."""
    med, mad = mad_stats(key.values)
    if mad == 0.0:
        raise DegenerateError(f"key {key.sample_id!r}: MAD is zero, cannot normalize range")
    scaled = np.clip((key.values - med) / (mad_span * mad), -1.0, 1.0)
    return (scaled + 1.0) / 2.0


def box_filter(grid: np.ndarray, kernel_size: int = 5) -> np.ndarray:
    """Box filter with replicated rows and circularly wrapped columns.

    Each window mean is accumulated relative to the window minimum so that
    constant regions come back bit-for-bit and no output leaves the range of
    its window.
    """
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise DataError(f"kernel_size must be odd and positive, got {kernel_size}")
    if kernel_size > MAX_KERNEL:
        raise DataError(f"kernel_size must be <= {MAX_KERNEL}, got {kernel_size}")
    half = kernel_size // 2
    padded = np.pad(grid, ((half, half), (0, 0)), mode="edge")
    padded = np.pad(padded, ((0, 0), (half, half)), mode="wrap")
    rows, cols = grid.shape
    shifts = [padded[dy:dy + rows, dx:dx + cols] for dy in range(kernel_size) for dx in range(kernel_size)]
    lo = shifts[0].copy()
    hi = shifts[0].copy()
    for s in shifts[1:]:
        np.minimum(lo, s, out=lo)
        np.maximum(hi, s, out=hi)
    excess = np.zeros_like(lo)
    for s in shifts:
        excess += s - lo
    out = lo + excess / (kernel_size * kernel_size)
    return np.minimum(out, hi)


def smooth(key: KeyPortion, kernel_size: int = 5) -> KeyPortion:
    out = box_filter(key.grid, kernel_size)
    return key.with_values(out.ravel(), Stage.PREPROCESSED)


def preprocess(key: KeyPortion, cfg: PreprocessConfig = PreprocessConfig()):
    """Quality filter -> range normalization -> smoothing.

    Returns ``(report, key)``; ``key`` is None when the report rejects the sample.
    """
    if key.stage != Stage.RAW:
        raise DataError(f"key {key.sample_id!r}: preprocess expects a raw key, got {key.stage.name}")
    report = quality_filter(key, cfg)
    if not report.accepted:
        return report, None
    ranged = key.with_values(normalize_range(key, cfg.mad_span), Stage.RAW)
    return report, smooth(ranged, cfg.kernel_size)


def preprocess_batch(keys, cfg: PreprocessConfig = PreprocessConfig(), mapper=map):
    """Preprocess many keys. ``mapper`` must preserve order (e.g. ``Executor.map``).

    Returns ``(kept, reports)`` where ``reports`` covers every input.
    """
    results = list(mapper(lambda k: preprocess(k, cfg), keys))
    kept = [k for _, k in results if k is not None]
    reports = [r for r, _ in results]
    return kept, reports


def average_per_eye(keys) -> list:
    """Elementwise mean per eye label, sorted by formatted label."""
    keys = list(keys)
    if not keys:
        raise DataError("average_per_eye needs at least one key")
    groups = defaultdict(list)
    for k in keys:
        groups[k.label].append(k)
    out = []
    for label in sorted(groups, key=format_label):
        # sum in sample_id order so the result does not depend on input order
        members = sorted(groups[label], key=lambda k: k.sample_id)
        stack = np.stack([m.values for m in members])
        out.append(KeyPortion(stack.mean(axis=0), label, format_label(label), Stage.AVERAGED))
    return out

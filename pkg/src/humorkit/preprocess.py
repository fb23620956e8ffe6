"""Preprocessing of raw per-annotator continuous annotation signals.

Signals are sampled at 2 Hz (one value per 500 ms frame). A value of 0 means
"no humor"; the sign carries polarity (sentiment: -/+ = negative/positive,
direction: -/+ = self/other-directed). Zero frames are excluded from every
statistic and are never modified by any stage.

The supported pipeline order is threshold -> clip -> normalize, with clip and
normalization statistics pooled per (annotator, dimension) group across all of
that annotator's videos.
"""

from collections.abc import Iterable
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError

DIMENSIONS = ("sentiment", "direction")

FRAME_MS = 500  # 2 Hz grid


@dataclass(frozen=True)
class AnnotationSignal:
    """One rater's continuous 2 Hz signal for one video and one dimension."""

    coach_id: str
    video_id: str
    annotator_id: str
    dimension: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.dimension not in DIMENSIONS:
            raise ValidationError(f"unknown dimension {self.dimension!r}")

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.coach_id, self.video_id, self.annotator_id, self.dimension)

    def validate(self) -> None:
        bad = np.flatnonzero(~np.isfinite(self.values))
        if bad.size:
            raise ValidationError(
                f"non-finite annotation value at frame {int(bad[0])} "
                f"({self.coach_id}/{self.video_id}/{self.annotator_id}/{self.dimension})"
            )


@dataclass(frozen=True)
class PreprocessConfig:
    """Parameters of the threshold -> clip -> normalize pipeline.

    The amplitude threshold is not stated in the source protocol; 0.05 is a
    small default relative to the normalized [-1, 1] range. normalize_mode
    'signed_separate' scales positive and negative magnitudes independently
    (preserving the neutral meaning of 0); 'global' applies one affine
    min-max map over all nonzero values.
    """

    amplitude_threshold: float = 0.05
    outlier_sigma: float = 2.5
    normalize_mode: str = "signed_separate"

    def __post_init__(self):
        if self.amplitude_threshold < 0:
            raise ValidationError("amplitude_threshold must be >= 0")
        if self.outlier_sigma <= 0:
            raise ValidationError("outlier_sigma must be > 0")
        if self.normalize_mode not in ("signed_separate", "global"):
            raise ValidationError(f"unknown normalize_mode {self.normalize_mode!r}")


def _threshold_values(values: np.ndarray, eps: float) -> np.ndarray:
    out = values.copy()
    out[np.abs(out) < eps] = 0.0
    return out


def _clip_values(values: np.ndarray, mean: float, std: float, sigma: float) -> np.ndarray:
    # Zeros stay untouched; nonzero values move to the nearer bound.
    out = values.copy()
    nz = out != 0
    lo, hi = mean - sigma * std, mean + sigma * std
    out[nz] = np.clip(out[nz], lo, hi)
    return out


def _normalize_values(values: np.ndarray, pos_max: float, neg_min: float) -> np.ndarray:
    out = values.copy()
    pos = out > 0
    neg = out < 0
    if pos_max > 0:
        out[pos] = out[pos] / pos_max
    if neg_min < 0:
        out[neg] = out[neg] / abs(neg_min)
    return out


def _global_normalize_values(values: np.ndarray, vmin: float, vmax: float) -> np.ndarray:
    out = values.copy()
    nz = out != 0
    if not np.any(nz):
        return out
    if vmax == vmin:
        # Single distinct nonzero magnitude: map onto the unit circle by sign.
        out[nz] = np.sign(out[nz])
        return out
    out[nz] = 2.0 * (out[nz] - vmin) / (vmax - vmin) - 1.0
    return out


def threshold_small_amplitudes(signal: AnnotationSignal, eps: float) -> AnnotationSignal:
    """Zero every value with |v| < eps; everything else is unchanged."""
    if eps < 0:
        raise ValidationError("eps must be >= 0")
    signal.validate()
    return replace(signal, values=_threshold_values(signal.values, eps))


def clip_outliers(signal: AnnotationSignal, sigma: float) -> AnnotationSignal:
    """Clip nonzero values beyond mean +/- sigma*std of the nonzero values.

    Mean and population standard deviation are computed over the signal's own
    nonzero values. Signals with fewer than two nonzero values pass through
    unchanged.
    """
    if sigma <= 0:
        raise ValidationError("sigma must be > 0")
    nz = signal.values[signal.values != 0]
    if nz.size < 2:
        return replace(signal, values=signal.values.copy())
    mean, std = float(np.mean(nz)), float(np.std(nz))
    return replace(signal, values=_clip_values(signal.values, mean, std, sigma))


def minmax_normalize(signal: AnnotationSignal, mode: str = "signed_separate") -> AnnotationSignal:
    """Scale nonzero values into [-1, 1]; zeros stay zero.

    signed_separate divides positives by the maximum positive and negatives by
    |minimum negative|, preserving signs. global applies a single affine map
    of [min nonzero, max nonzero] onto [-1, 1].
    """
    v = signal.values
    if mode == "signed_separate":
        pos = v[v > 0]
        neg = v[v < 0]
        pos_max = float(pos.max()) if pos.size else 0.0
        neg_min = float(neg.min()) if neg.size else 0.0
        return replace(signal, values=_normalize_values(v, pos_max, neg_min))
    if mode == "global":
        nz = v[v != 0]
        if nz.size == 0:
            return replace(signal, values=v.copy())
        return replace(signal, values=_global_normalize_values(v, float(nz.min()), float(nz.max())))
    raise ValidationError(f"unknown normalize_mode {mode!r}")


def preprocess_all(
    signals: Iterable[AnnotationSignal], config: PreprocessConfig | None = None
) -> list[AnnotationSignal]:
    """Run threshold -> clip -> normalize per (annotator, dimension) group.

    Clip statistics and normalization extrema are pooled over all of an
    annotator's videos within the group, so two videos by the same annotator
    are treated exactly like their concatenation. Output order matches input
    order.

    Raises
    ------
    ValidationError
        On duplicate (coach, video, annotator, dimension) keys or non-finite
        values.
    """
    config = config or PreprocessConfig()
    signals = list(signals)
    seen = set()
    for s in signals:
        s.validate()
        if s.key in seen:
            raise ValidationError(f"duplicate annotation signal key {s.key}")
        seen.add(s.key)

    groups: dict[tuple[str, str], list[int]] = {}
    for i, s in enumerate(signals):
        groups.setdefault((s.annotator_id, s.dimension), []).append(i)

    out: list[AnnotationSignal | None] = [None] * len(signals)
    for _, idxs in sorted(groups.items()):
        values = [_threshold_values(signals[i].values, config.amplitude_threshold) for i in idxs]

        pooled = np.concatenate([v[v != 0] for v in values]) if values else np.array([])
        if pooled.size >= 2:
            mean, std = float(np.mean(pooled)), float(np.std(pooled))
            values = [_clip_values(v, mean, std, config.outlier_sigma) for v in values]

        pooled = np.concatenate([v[v != 0] for v in values]) if values else np.array([])
        if config.normalize_mode == "signed_separate":
            pos = pooled[pooled > 0]
            neg = pooled[pooled < 0]
            pos_max = float(pos.max()) if pos.size else 0.0
            neg_min = float(neg.min()) if neg.size else 0.0
            values = [_normalize_values(v, pos_max, neg_min) for v in values]
        else:
            if pooled.size:
                vmin, vmax = float(pooled.min()), float(pooled.max())
                values = [_global_normalize_values(v, vmin, vmax) for v in values]

        for i, v in zip(idxs, values):
            out[i] = replace(signals[i], values=v)
    return [s for s in out if s is not None]

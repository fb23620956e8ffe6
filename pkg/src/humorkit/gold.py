"""Gold-standard fusion of per-annotator signals and segment labeling.

Per coach and dimension, annotator weights combine two agreement aspects
computed on the active frames (frames where at least one annotator caused an
amplitude): mean pairwise CCC of the signals and mean pairwise CCC of their
absolute amplitudes. The normalized weights drive a weighted-sum fusion.
Binary humor segments use 2 s windows with 1 s hop on the 2 Hz grid, a
drop-k / quorum rule over the annotators' binary labels, and mean pooling of
the fused dimensions with zeroing outside humorous segments.
"""

import warnings
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .agreement import ccc, jaccard
from .errors import ValidationError

WINDOW_FRAMES = 4  # 2 s at 2 Hz
HOP_FRAMES = 2  # 1 s
WINDOW_MS = 2000
HOP_MS = 1000

STYLE_NAMES = {
    (-1, -1): "self_negative",
    (-1, 1): "self_positive",
    (1, -1): "other_negative",
    (1, 1): "other_positive",
}


@dataclass(frozen=True)
class AnnotatorWeights:
    """Fusion weights for one coach: w = (w' + w'') / sum, floored at 0."""

    coach_id: str
    annotator_ids: tuple[str, ...]
    w_prime: np.ndarray
    w_double_prime: np.ndarray
    w: np.ndarray

    def as_mapping(self) -> dict[str, float]:
        return {a: float(w) for a, w in zip(self.annotator_ids, self.w)}


@dataclass
class SegmentTable:
    """2 s / 1 s-hop segments with binary humor and pooled dimension values."""

    coach_id: np.ndarray
    video_id: np.ndarray
    segment_index: np.ndarray
    start_ms: np.ndarray
    end_ms: np.ndarray
    humor: np.ndarray
    sentiment: np.ndarray
    direction: np.ndarray

    def __len__(self) -> int:
        return len(self.humor)

    def validate(self) -> None:
        n = len(self)
        for name in ("coach_id", "video_id", "segment_index", "start_ms", "end_ms"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"segment table column {name} has wrong length")
        if np.any(self.end_ms - self.start_ms != WINDOW_MS):
            raise ValidationError("segment window length != 2000 ms")
        zero = self.humor == 0
        if np.any(self.sentiment[zero] != 0) or np.any(self.direction[zero] != 0):
            raise ValidationError("nonzero sentiment/direction on a humor=0 segment")

    def mask(self, keep: np.ndarray) -> "SegmentTable":
        return SegmentTable(
            coach_id=self.coach_id[keep],
            video_id=self.video_id[keep],
            segment_index=self.segment_index[keep],
            start_ms=self.start_ms[keep],
            end_ms=self.end_ms[keep],
            humor=self.humor[keep],
            sentiment=self.sentiment[keep],
            direction=self.direction[keep],
        )

    @property
    def keys(self) -> list[tuple[str, str, int]]:
        return list(zip(self.coach_id, self.video_id, (int(i) for i in self.segment_index)))


def segment_count(n_frames: int) -> int:
    """Number of 4-frame windows at hop 2 that fit into n_frames (no padding)."""
    if n_frames < WINDOW_FRAMES:
        return 0
    return (n_frames - WINDOW_FRAMES) // HOP_FRAMES + 1


def active_frames(
    signals: Mapping[str, Mapping[str, np.ndarray]],
) -> dict[str, np.ndarray]:
    """Concatenate each annotator's values at frames where anyone is nonzero.

    `signals[annotator][video]` are one coach's values for one dimension.
    Every annotator must cover every video with matching lengths. Videos are
    concatenated in sorted video_id order before selecting active columns.
    """
    annotators = sorted(signals)
    if not annotators:
        return {}
    videos = sorted(signals[annotators[0]])
    for a in annotators:
        if sorted(signals[a]) != videos:
            raise ValidationError(f"annotator {a} does not cover all videos")
    rows = []
    for a in annotators:
        parts = []
        for v in videos:
            values = np.asarray(signals[a][v], dtype=np.float64)
            if values.shape != np.asarray(signals[annotators[0]][v]).shape:
                raise ValidationError(f"length mismatch for video {v}, annotator {a}")
            parts.append(values)
        rows.append(np.concatenate(parts) if parts else np.array([]))
    stacked = np.vstack(rows)
    active = np.any(stacked != 0, axis=0)
    return {a: stacked[i, active] for i, a in enumerate(annotators)}


def normalize_weight_sums(sums: np.ndarray) -> np.ndarray:
    """Final weight step: floor raw (w' + w'') sums at 0 and normalize to 1.

    An all-zero (or all-negative) total falls back to uniform weights with a
    warning; negative pairwise agreement is not covered by the weighting rule.
    """
    sums = np.maximum(np.asarray(sums, dtype=np.float64), 0.0)
    total = sums.sum()
    if total <= 0.0:
        warnings.warn("non-positive agreement total; falling back to uniform weights")
        return np.full(len(sums), 1.0 / len(sums))
    return sums / total


def compute_weights(active: Mapping[str, np.ndarray], coach_id: str = "") -> AnnotatorWeights:
    """Agreement-based fusion weights from active-frame signals.

    w'_a is the mean CCC between annotator a and every other annotator,
    w''_a the same on absolute amplitudes, and w_a the normalized sum of the
    two. Degenerate inputs (fewer than 2 active frames, or a non-positive
    agreement total) fall back to uniform weights with a warning.
    """
    annotators = sorted(active)
    if len(annotators) < 2:
        raise ValidationError("compute_weights needs >= 2 annotators")
    n = len(annotators)
    first = np.asarray(active[annotators[0]])
    if first.size < 2:
        warnings.warn("fewer than 2 active frames; falling back to uniform weights")
        uniform = np.full(n, 1.0 / n)
        return AnnotatorWeights(coach_id, tuple(annotators), np.zeros(n), np.zeros(n), uniform)

    signals = [np.asarray(active[a], dtype=np.float64) for a in annotators]
    w_prime = np.zeros(n)
    w_double = np.zeros(n)
    for i in range(n):
        w_prime[i] = np.mean([ccc(signals[i], signals[j]) for j in range(n) if j != i])
        w_double[i] = np.mean(
            [ccc(np.abs(signals[i]), np.abs(signals[j])) for j in range(n) if j != i]
        )
    w = normalize_weight_sums(w_prime + w_double)
    return AnnotatorWeights(coach_id, tuple(annotators), w_prime, w_double, w)


def fuse(signals: Mapping[str, np.ndarray], weights: AnnotatorWeights) -> np.ndarray:
    """Weighted sum of the annotators' signals using normalized weights.

    Computed anchored on the first annotator, fused = x_1 + sum_a w_a*(x_a -
    x_1), which is algebraically the weighted sum (weights sum to 1) and is
    exact when all annotators submit the identical signal.
    """
    annotators = sorted(signals)
    wmap = weights.as_mapping()
    missing = [a for a in annotators if a not in wmap]
    if missing:
        raise ValidationError(f"annotators missing from weights: {missing}")
    arrays = [np.asarray(signals[a], dtype=np.float64) for a in annotators]
    lengths = {a.shape for a in arrays}
    if len(lengths) > 1:
        raise ValidationError("fuse requires equal signal lengths")
    anchor = arrays[0]
    fused = anchor.copy()
    for a, x in zip(annotators, arrays):
        fused += wmap[a] * (x - anchor)
    return fused


def drop_low_agreement(
    binary_labels: Mapping[str, Mapping[str, np.ndarray]], k: int = 3
) -> list[str]:
    """Drop the k annotators with the lowest mean pairwise Jaccard agreement.

    `binary_labels[annotator][video]` are frame-level binary humor labels.
    The per-video mean Jaccard against all other annotators is averaged over
    videos; ties break by annotator_id ascending (lower id dropped first).
    Returns the retained annotator ids, sorted.
    """
    annotators = sorted(binary_labels)
    if k >= len(annotators):
        raise ValidationError(f"cannot drop {k} of {len(annotators)} annotators")
    if k == 0:
        return annotators
    videos = sorted(binary_labels[annotators[0]])
    mean_agreement = {}
    for a in annotators:
        per_video = []
        for v in videos:
            scores = [
                jaccard(binary_labels[a][v], binary_labels[other][v])
                for other in annotators
                if other != a
            ]
            per_video.append(np.mean(scores))
        mean_agreement[a] = float(np.mean(per_video))
    ranked = sorted(annotators, key=lambda a: (mean_agreement[a], a))
    dropped = set(ranked[:k])
    return [a for a in annotators if a not in dropped]


def segment_binary(
    binary_labels: Mapping[str, np.ndarray], quorum: int = 3
) -> np.ndarray:
    """Window-level humor labels for one video from retained annotators.

    A window is humorous iff at least `quorum` annotators have any nonzero
    frame inside it. Windows are 4 frames with hop 2, anchored at frame 0;
    trailing partial windows are discarded. Videos shorter than one window
    contribute zero segments (with a warning).
    """
    annotators = sorted(binary_labels)
    if quorum > len(annotators):
        raise ValidationError(f"quorum {quorum} exceeds {len(annotators)} retained annotators")
    length = len(binary_labels[annotators[0]])
    for a in annotators:
        if len(binary_labels[a]) != length:
            raise ValidationError(f"binary label length mismatch for annotator {a}")
    n_seg = segment_count(length)
    if n_seg == 0:
        warnings.warn(f"video of {length} frames is shorter than one window; no segments")
        return np.zeros(0, dtype=np.int8)
    stacked = np.vstack([np.asarray(binary_labels[a]) != 0 for a in annotators])
    out = np.zeros(n_seg, dtype=np.int8)
    for s in range(n_seg):
        window = stacked[:, s * HOP_FRAMES : s * HOP_FRAMES + WINDOW_FRAMES]
        out[s] = 1 if int(np.any(window, axis=1).sum()) >= quorum else 0
    return out


def segment_dimensions(fused: np.ndarray, humor: np.ndarray) -> np.ndarray:
    """Mean-pool a fused signal onto the window grid and zero non-humor windows."""
    fused = np.asarray(fused, dtype=np.float64)
    n_seg = segment_count(len(fused))
    if n_seg != len(humor):
        raise ValidationError(f"expected {n_seg} humor labels, got {len(humor)}")
    out = np.zeros(n_seg)
    for s in range(n_seg):
        if humor[s]:
            out[s] = np.mean(fused[s * HOP_FRAMES : s * HOP_FRAMES + WINDOW_FRAMES])
    return out


def build_segment_table(
    humor: Mapping[tuple[str, str], np.ndarray],
    sentiment: Mapping[tuple[str, str], np.ndarray],
    direction: Mapping[tuple[str, str], np.ndarray],
) -> SegmentTable:
    """Assemble a SegmentTable from per-(coach, video) window-level columns."""
    rows = sorted(humor)
    cols: dict[str, list] = {k: [] for k in ("coach", "video", "idx", "start", "end", "h", "s", "d")}
    for coach, video in rows:
        h = humor[(coach, video)]
        s = sentiment[(coach, video)]
        d = direction[(coach, video)]
        if len(s) != len(h) or len(d) != len(h):
            raise ValidationError(f"column length mismatch for {(coach, video)}")
        n = len(h)
        cols["coach"].append(np.full(n, coach, dtype=object))
        cols["video"].append(np.full(n, video, dtype=object))
        cols["idx"].append(np.arange(n))
        cols["start"].append(np.arange(n) * HOP_MS)
        cols["end"].append(np.arange(n) * HOP_MS + WINDOW_MS)
        cols["h"].append(h)
        cols["s"].append(s)
        cols["d"].append(d)

    def cat(name, dtype=None):
        if not rows:
            return np.array([], dtype=dtype if dtype is not None else np.float64)
        return np.concatenate(cols[name]).astype(dtype) if dtype else np.concatenate(cols[name])

    table = SegmentTable(
        coach_id=cat("coach"),
        video_id=cat("video"),
        segment_index=cat("idx", np.int64),
        start_ms=cat("start", np.int64),
        end_ms=cat("end", np.int64),
        humor=cat("h", np.int8),
        sentiment=cat("s", np.float64),
        direction=cat("d", np.float64),
    )
    table.validate()
    return table


@dataclass
class CorpusStats:
    """Humor rate and 2x2 style shares (overall and across coaches)."""

    n_segments: int
    n_humorous: int
    humor_rate: float
    style_shares: dict[str, float]  # overall shares, NaN when undefined
    per_coach_humor_rate: dict[str, float]
    per_coach_style_shares: dict[str, dict[str, float]] = field(default_factory=dict)
    style_share_mean: dict[str, float] = field(default_factory=dict)  # across coaches
    style_share_std: dict[str, float] = field(default_factory=dict)


def _style_shares(direction: np.ndarray, sentiment: np.ndarray) -> dict[str, float]:
    signs = np.sign(direction).astype(int), np.sign(sentiment).astype(int)
    defined = (signs[0] != 0) & (signs[1] != 0)
    total = int(defined.sum())
    shares = {}
    for (d, s), name in STYLE_NAMES.items():
        count = int(np.count_nonzero((signs[0] == d) & (signs[1] == s)))
        shares[name] = count / total if total else float("nan")
    return shares


def corpus_stats(table: SegmentTable) -> CorpusStats:
    """Summary statistics over a segment table.

    Style shares partition the humorous segments by the signs of (direction,
    sentiment); segments with a zero value in either dimension (sign
    undefined) are excluded from the partition. With no humorous segments the
    shares are reported as NaN.
    """
    if len(table) == 0:
        raise ValidationError("corpus_stats requires a nonempty segment table")
    humorous = table.humor == 1
    n_humor = int(humorous.sum())
    if n_humor == 0:
        warnings.warn("no humorous segments; style shares undefined")
    shares = _style_shares(table.direction[humorous], table.sentiment[humorous])

    coaches = sorted(set(table.coach_id))
    per_coach_rate = {}
    per_coach_styles: dict[str, dict[str, float]] = {}
    pooled: dict[str, list[float]] = {name: [] for name in STYLE_NAMES.values()}
    for coach in coaches:
        sel = table.coach_id == coach
        per_coach_rate[coach] = float(np.mean(table.humor[sel]))
        coach_humor = sel & humorous
        coach_shares = _style_shares(table.direction[coach_humor], table.sentiment[coach_humor])
        per_coach_styles[coach] = coach_shares
        for name, value in coach_shares.items():
            if np.isfinite(value):
                pooled[name].append(value)

    mean = {n: float(np.mean(v)) if v else float("nan") for n, v in pooled.items()}
    std = {n: float(np.std(v)) if v else float("nan") for n, v in pooled.items()}
    return CorpusStats(
        n_segments=len(table),
        n_humorous=n_humor,
        humor_rate=n_humor / len(table),
        style_shares=shares,
        per_coach_humor_rate=per_coach_rate,
        per_coach_style_shares=per_coach_styles,
        style_share_mean=mean,
        style_share_std=std,
    )

"""End-to-end orchestration of the annotation -> gold standard -> segment path.

These functions operate on in-memory objects; the CLI adds file I/O and run
manifests around them.
"""

from collections.abc import Iterable, Mapping

import numpy as np

from .agreement import binary_humor
from .errors import ValidationError
from .gold import (
    AnnotatorWeights,
    SegmentTable,
    active_frames,
    build_segment_table,
    compute_weights,
    drop_low_agreement,
    fuse,
    segment_binary,
    segment_dimensions,
)
from .preprocess import DIMENSIONS, AnnotationSignal

SignalIndex = dict[tuple[str, str, str, str], AnnotationSignal]


def index_signals(signals: Iterable[AnnotationSignal]) -> SignalIndex:
    index: SignalIndex = {}
    for s in signals:
        if s.key in index:
            raise ValidationError(f"duplicate annotation signal key {s.key}")
        index[s.key] = s
    return index


def _by_coach(index: SignalIndex) -> dict[str, dict]:
    """coach -> dimension -> annotator -> video -> values."""
    tree: dict[str, dict] = {}
    for (coach, video, annotator, dimension), signal in index.items():
        tree.setdefault(coach, {}).setdefault(dimension, {}).setdefault(annotator, {})[video] = (
            signal.values
        )
    return tree


def compute_all_weights(
    signals: Iterable[AnnotationSignal],
) -> dict[tuple[str, str], AnnotatorWeights]:
    """Fusion weights per (coach, dimension) from active-frame agreement."""
    tree = _by_coach(index_signals(signals))
    out: dict[tuple[str, str], AnnotatorWeights] = {}
    for coach in sorted(tree):
        for dimension in DIMENSIONS:
            per_annotator = tree[coach].get(dimension)
            if not per_annotator:
                continue
            active = active_frames(per_annotator)
            out[(coach, dimension)] = compute_weights(active, coach_id=coach)
    return out


def fuse_all(
    signals: Iterable[AnnotationSignal],
    weights: Mapping[tuple[str, str], AnnotatorWeights] | None = None,
) -> dict[tuple[str, str, str], np.ndarray]:
    """Fused signal per (coach, video, dimension)."""
    index = index_signals(signals)
    tree = _by_coach(index)
    if weights is None:
        weights = compute_all_weights(index.values())
    fused: dict[tuple[str, str, str], np.ndarray] = {}
    for coach in sorted(tree):
        for dimension in DIMENSIONS:
            per_annotator = tree[coach].get(dimension)
            if not per_annotator:
                continue
            w = weights[(coach, dimension)]
            videos = sorted({v for vids in per_annotator.values() for v in vids})
            for video in videos:
                per_video = {a: vids[video] for a, vids in per_annotator.items()}
                fused[(coach, video, dimension)] = fuse(per_video, w)
    return fused


def _binary_labels_tree(index: SignalIndex) -> dict[str, dict[str, dict[str, np.ndarray]]]:
    """coach -> annotator -> video -> frame-level binary humor labels."""
    tree = _by_coach(index)
    out: dict[str, dict[str, dict[str, np.ndarray]]] = {}
    for coach, dims in tree.items():
        sent = dims.get("sentiment", {})
        dire = dims.get("direction", {})
        annotators = sorted(set(sent) | set(dire))
        for annotator in annotators:
            videos = sorted(set(sent.get(annotator, {})) | set(dire.get(annotator, {})))
            for video in videos:
                s = sent.get(annotator, {}).get(video)
                d = dire.get(annotator, {}).get(video)
                if s is None or d is None:
                    raise ValidationError(
                        f"missing dimension for {coach}/{video}/{annotator}"
                    )
                out.setdefault(coach, {}).setdefault(annotator, {})[video] = binary_humor(s, d)
    return out


def make_segment_table(
    signals: Iterable[AnnotationSignal],
    fused: Mapping[tuple[str, str, str], np.ndarray] | None = None,
    drop_k: int = 3,
    quorum: int = 3,
    drop_scope: str = "coach",
) -> SegmentTable:
    """Segment a corpus: drop low-agreement annotators, apply the quorum rule,
    pool the fused dimensions, and zero them outside humorous segments.

    drop_scope 'coach' makes one drop decision per coach from agreement
    averaged over the coach's videos; 'video' re-decides per video.
    """
    if drop_scope not in ("coach", "video"):
        raise ValidationError(f"unknown drop_scope {drop_scope!r}")
    index = index_signals(signals)
    if fused is None:
        fused = fuse_all(index.values())
    labels = _binary_labels_tree(index)

    humor: dict[tuple[str, str], np.ndarray] = {}
    sentiment: dict[tuple[str, str], np.ndarray] = {}
    direction: dict[tuple[str, str], np.ndarray] = {}
    for coach in sorted(labels):
        per_annotator = labels[coach]
        videos = sorted({v for vids in per_annotator.values() for v in vids})
        if drop_scope == "coach":
            retained = drop_low_agreement(per_annotator, k=drop_k)
        for video in videos:
            if drop_scope == "video":
                single = {a: {video: vids[video]} for a, vids in per_annotator.items()}
                retained = drop_low_agreement(single, k=drop_k)
            video_labels = {a: per_annotator[a][video] for a in retained}
            h = segment_binary(video_labels, quorum=quorum)
            humor[(coach, video)] = h
            sentiment[(coach, video)] = segment_dimensions(
                fused[(coach, video, "sentiment")], h
            )
            direction[(coach, video)] = segment_dimensions(
                fused[(coach, video, "direction")], h
            )
    return build_segment_table(humor, sentiment, direction)

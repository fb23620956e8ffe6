"""CSV schemas shared by the CLI stages.

Annotation files are sparse: frames without a row are implicit zeros, so a
sidecar ``videos.csv`` (coach_id, video_id, duration_ms) pins every video's
frame count (duration_ms / 500, rounded down). All floats are written with
shortest round-tripping repr.
"""

import csv
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .evaluate import PredictionSet
from .gold import AnnotatorWeights, SegmentTable
from .preprocess import DIMENSIONS, FRAME_MS, AnnotationSignal

ANNOTATION_HEADER = ["coach_id", "video_id", "annotator_id", "dimension", "t_ms", "value"]
VIDEO_HEADER = ["coach_id", "video_id", "duration_ms"]
WEIGHTS_HEADER = ["coach_id", "dimension", "annotator_id", "w_prime", "w_double_prime", "w"]
GOLD_HEADER = ["coach_id", "video_id", "t_ms", "sentiment", "direction"]
SEGMENT_HEADER = [
    "coach_id", "video_id", "segment_index", "start_ms", "end_ms",
    "humor", "sentiment", "direction",
]
PREDICTION_HEADER = [
    "task", "source", "coach_id", "video_id", "segment_index", "score", "training_quality",
]


def _read_rows(path: Path, expected_header: list[str]):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected_header:
            raise ValidationError(f"{path}: expected header {expected_header}, got {header}")
        yield from ((lineno, row) for lineno, row in enumerate(reader, start=2))


def write_videos_csv(path: Path, video_coach: dict[str, str], video_frames: dict[str, int]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(VIDEO_HEADER)
        for video in sorted(video_coach):
            writer.writerow([video_coach[video], video, video_frames[video] * FRAME_MS])


def read_videos_csv(path: Path) -> tuple[dict[str, str], dict[str, int]]:
    video_coach: dict[str, str] = {}
    video_frames: dict[str, int] = {}
    for lineno, row in _read_rows(path, VIDEO_HEADER):
        if len(row) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 3 columns")
        coach, video, duration = row[0], row[1], int(row[2])
        if video in video_coach:
            raise ValidationError(f"{path}:{lineno}: duplicate video {video}")
        video_coach[video] = coach
        video_frames[video] = duration // FRAME_MS
    return video_coach, video_frames


def write_annotations_csv(path: Path, signals: list[AnnotationSignal]) -> None:
    """Write nonzero frames only, sorted by key and time."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_HEADER)
        for s in sorted(signals, key=lambda s: s.key):
            for t in np.flatnonzero(s.values != 0):
                writer.writerow(
                    [s.coach_id, s.video_id, s.annotator_id, s.dimension,
                     int(t) * FRAME_MS, str(s.values[t])]
                )


def read_annotations_csv(path: Path, videos_path: Path) -> list[AnnotationSignal]:
    """Materialize dense signals for every (video, annotator, dimension).

    Every annotator appearing anywhere in the file is assumed to have rated
    every video (frames without rows are zeros).
    """
    video_coach, video_frames = read_videos_csv(videos_path)
    values: dict[tuple[str, str, str, str], np.ndarray] = {}
    annotators: set[str] = set()
    rows = []
    for lineno, row in _read_rows(path, ANNOTATION_HEADER):
        if len(row) != 6:
            raise ValidationError(f"{path}:{lineno}: expected 6 columns")
        coach, video, annotator, dimension = row[0], row[1], row[2], row[3]
        if dimension not in DIMENSIONS:
            raise ValidationError(f"{path}:{lineno}: unknown dimension {dimension!r}")
        if video not in video_coach:
            raise ValidationError(f"{path}:{lineno}: video {video!r} not in videos.csv")
        if video_coach[video] != coach:
            raise ValidationError(f"{path}:{lineno}: video {video!r} belongs to {video_coach[video]!r}")
        t_ms = int(row[4])
        if t_ms < 0 or t_ms % FRAME_MS != 0:
            raise ValidationError(f"{path}:{lineno}: t_ms {t_ms} not a nonnegative multiple of 500")
        frame = t_ms // FRAME_MS
        if frame >= video_frames[video]:
            raise ValidationError(f"{path}:{lineno}: t_ms {t_ms} beyond video duration")
        value = float(row[5])
        if not np.isfinite(value):
            raise ValidationError(f"{path}:{lineno}: non-finite value")
        annotators.add(annotator)
        rows.append((coach, video, annotator, dimension, frame, value))

    seen_frames: set[tuple] = set()
    for coach, video, annotator, dimension, frame, value in rows:
        key = (coach, video, annotator, dimension)
        if key not in values:
            values[key] = np.zeros(video_frames[video])
        if (key, frame) in seen_frames:
            raise ValidationError(f"duplicate frame {frame} for {key}")
        seen_frames.add((key, frame))
        values[key][frame] = value

    signals = []
    for video in sorted(video_coach):
        coach = video_coach[video]
        for annotator in sorted(annotators):
            for dimension in DIMENSIONS:
                key = (coach, video, annotator, dimension)
                signals.append(
                    AnnotationSignal(
                        coach, video, annotator, dimension,
                        values.get(key, np.zeros(video_frames[video])),
                    )
                )
    return signals


def write_weights_csv(path: Path, weights: dict[tuple[str, str], AnnotatorWeights]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WEIGHTS_HEADER)
        for (coach, dimension), w in sorted(weights.items()):
            for i, annotator in enumerate(w.annotator_ids):
                writer.writerow(
                    [coach, dimension, annotator,
                     str(float(w.w_prime[i])), str(float(w.w_double_prime[i])), str(float(w.w[i]))]
                )


def write_gold_csv(path: Path, fused: dict[tuple[str, str, str], np.ndarray]) -> None:
    """Fused per-frame values; rows are (coach, video, t_ms) with both dimensions."""
    by_video: dict[tuple[str, str], dict[str, np.ndarray]] = {}
    for (coach, video, dimension), values in fused.items():
        by_video.setdefault((coach, video), {})[dimension] = values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GOLD_HEADER)
        for (coach, video), dims in sorted(by_video.items()):
            if set(dims) != set(DIMENSIONS):
                raise ValidationError(f"gold output for {video} missing a dimension")
            sent, dire = dims["sentiment"], dims["direction"]
            for t in range(len(sent)):
                writer.writerow(
                    [coach, video, t * FRAME_MS, str(float(sent[t])), str(float(dire[t]))]
                )


def read_gold_csv(path: Path) -> dict[tuple[str, str, str], np.ndarray]:
    tmp: dict[tuple[str, str], list[tuple[int, float, float]]] = {}
    for lineno, row in _read_rows(path, GOLD_HEADER):
        if len(row) != 5:
            raise ValidationError(f"{path}:{lineno}: expected 5 columns")
        tmp.setdefault((row[0], row[1]), []).append(
            (int(row[2]) // FRAME_MS, float(row[3]), float(row[4]))
        )
    out: dict[tuple[str, str, str], np.ndarray] = {}
    for (coach, video), entries in tmp.items():
        entries.sort()
        frames = [e[0] for e in entries]
        if frames != list(range(len(entries))):
            raise ValidationError(f"{path}: gold frames for {video} are not contiguous")
        out[(coach, video, "sentiment")] = np.array([e[1] for e in entries])
        out[(coach, video, "direction")] = np.array([e[2] for e in entries])
    return out


def write_segments_csv(path: Path, table: SegmentTable) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SEGMENT_HEADER)
        for i in range(len(table)):
            writer.writerow(
                [table.coach_id[i], table.video_id[i], int(table.segment_index[i]),
                 int(table.start_ms[i]), int(table.end_ms[i]), int(table.humor[i]),
                 str(float(table.sentiment[i])), str(float(table.direction[i]))]
            )


def read_segments_csv(path: Path) -> SegmentTable:
    cols: dict[str, list] = {name: [] for name in SEGMENT_HEADER}
    for lineno, row in _read_rows(path, SEGMENT_HEADER):
        if len(row) != len(SEGMENT_HEADER):
            raise ValidationError(f"{path}:{lineno}: expected {len(SEGMENT_HEADER)} columns")
        for name, value in zip(SEGMENT_HEADER, row):
            cols[name].append(value)
    table = SegmentTable(
        coach_id=np.array(cols["coach_id"], dtype=object),
        video_id=np.array(cols["video_id"], dtype=object),
        segment_index=np.array([int(v) for v in cols["segment_index"]], dtype=np.int64),
        start_ms=np.array([int(v) for v in cols["start_ms"]], dtype=np.int64),
        end_ms=np.array([int(v) for v in cols["end_ms"]], dtype=np.int64),
        humor=np.array([int(v) for v in cols["humor"]], dtype=np.int8),
        sentiment=np.array([float(v) for v in cols["sentiment"]], dtype=np.float64),
        direction=np.array([float(v) for v in cols["direction"]], dtype=np.float64),
    )
    table.validate()
    return table


def write_predictions_csv(path: Path, sets: list[PredictionSet]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTION_HEADER)
        for p in sets:
            quality = "" if p.training_quality is None else str(float(p.training_quality))
            for (coach, video, idx), score in zip(p.keys, p.scores):
                writer.writerow([p.task, p.source, coach, video, idx, str(float(score)), quality])


def read_predictions_csv(path: Path) -> list[PredictionSet]:
    grouped: dict[tuple[str, str, str], list] = {}
    for lineno, row in _read_rows(path, PREDICTION_HEADER):
        if len(row) != 7:
            raise ValidationError(f"{path}:{lineno}: expected 7 columns")
        task, source = row[0], row[1]
        key = (row[2], row[3], int(row[4]))
        quality = row[6]
        grouped.setdefault((task, source, quality), []).append((key, float(row[5])))
    sets = []
    for (task, source, quality), entries in sorted(grouped.items()):
        keys = tuple(k for k, _ in entries)
        scores = np.array([s for _, s in entries])
        sets.append(
            PredictionSet(
                task=task, source=source, keys=keys, scores=scores,
                training_quality=float(quality) if quality else None,
            )
        )
    return sets


def write_agreement_csv(path: Path, rows: list[tuple[str, str, str, str, float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "dimension", "coach_id", "annotator_id", "value"])
        for metric, dimension, coach, annotator, value in rows:
            writer.writerow([metric, dimension, coach, annotator, str(float(value))])


def write_matrix_csv(path: Path, row_ids: list[str], col_ids: list[str], matrix: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coach_id"] + list(col_ids))
        for i, row_id in enumerate(row_ids):
            writer.writerow(
                [row_id] + ["" if not np.isfinite(v) else str(float(v)) for v in matrix[i]]
            )

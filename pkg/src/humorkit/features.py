"""Feature-file ingestion and alignment to the 2 Hz frame grid.

A feature file carries one (video, modality) matrix with one row per 500 ms
frame in either CSV (header ``t_ms,f0..f{dim-1}``) or a packed binary with
magic ``HFZ1``, a textual header line ``video_id,modality,dim,T`` and
little-endian float32 rows. Sentence-level features come as spans
(``video_id,start_ms,end_ms,f0..``) and are averaged onto the frames they
intersect.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .gold import WINDOW_FRAMES, SegmentTable
from .preprocess import FRAME_MS

MODALITIES = ("audio", "text", "video")

HFZ_MAGIC = b"HFZ1"


@dataclass(frozen=True)
class FeatureSequence:
    """Fixed-dimension feature vectors for one video and modality, 2 Hz grid."""

    video_id: str
    modality: str
    vectors: np.ndarray  # T x dim, float32

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise ValidationError("feature vectors must be a T x dim matrix")
        if not np.all(np.isfinite(vectors)):
            raise ValidationError(f"non-finite feature value in {self.video_id}/{self.modality}")
        object.__setattr__(self, "vectors", vectors)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def frames(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class SentenceSpan:
    """One sentence-level feature vector covering [start_ms, end_ms)."""

    video_id: str
    start_ms: int
    end_ms: int
    vector: np.ndarray

    def __post_init__(self):
        if self.start_ms >= self.end_ms:
            raise ValidationError(
                f"span start {self.start_ms} >= end {self.end_ms} in {self.video_id}"
            )
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=np.float32))


def write_feature_csv(path: Path, features: FeatureSequence) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_ms"] + [f"f{i}" for i in range(features.dim)])
        for t, row in enumerate(features.vectors):
            writer.writerow([t * FRAME_MS] + [str(v) for v in row])


def read_feature_csv(path: Path, video_id: str, modality: str) -> FeatureSequence:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t_ms":
            raise ValidationError(f"{path}: expected feature header starting with t_ms")
        dim = len(header) - 1
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 1:
                raise ValidationError(f"{path}:{lineno}: expected {dim + 1} columns")
            t_ms = int(row[0])
            if t_ms != (lineno - 2) * FRAME_MS:
                raise ValidationError(f"{path}:{lineno}: t_ms {t_ms} off the 500 ms grid")
            rows.append(np.array(row[1:], dtype=np.float32))
    vectors = np.vstack(rows) if rows else np.zeros((0, dim), dtype=np.float32)
    return FeatureSequence(video_id=video_id, modality=modality, vectors=vectors)


def write_feature_hfz(path: Path, features: FeatureSequence) -> None:
    data = np.ascontiguousarray(features.vectors, dtype="<f4")
    header = f"{features.video_id},{features.modality},{features.dim},{features.frames}\n"
    with open(path, "wb") as fh:
        fh.write(HFZ_MAGIC)
        fh.write(header.encode("utf-8"))
        fh.write(data.tobytes())


def read_feature_hfz(path: Path) -> FeatureSequence:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != HFZ_MAGIC:
            raise ValidationError(f"{path}: bad magic {magic!r}, expected {HFZ_MAGIC!r}")
        header = bytearray()
        while True:
            ch = fh.read(1)
            if not ch:
                raise ValidationError(f"{path}: truncated header")
            if ch == b"\n":
                break
            header.extend(ch)
        parts = header.decode("utf-8").split(",")
        if len(parts) != 4:
            raise ValidationError(f"{path}: malformed header {header!r}")
        video_id, modality, dim_s, frames_s = parts
        dim, frames = int(dim_s), int(frames_s)
        payload = fh.read()
    expected = dim * frames * 4
    if len(payload) != expected:
        raise ValidationError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(frames, dim)
    return FeatureSequence(video_id=video_id, modality=modality, vectors=vectors.copy())


def read_sentence_spans(path: Path) -> dict[str, list[SentenceSpan]]:
    """Load sentence spans grouped by video; dims must agree across the file."""
    spans: dict[str, list[SentenceSpan]] = {}
    dim = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:3] != ["video_id", "start_ms", "end_ms"]:
            raise ValidationError(f"{path}: expected header video_id,start_ms,end_ms,f0..")
        dim = len(header) - 3
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 3:
                raise ValidationError(f"{path}:{lineno}: expected {dim + 3} columns")
            span = SentenceSpan(
                video_id=row[0],
                start_ms=int(row[1]),
                end_ms=int(row[2]),
                vector=np.array(row[3:], dtype=np.float32),
            )
            spans.setdefault(span.video_id, []).append(span)
    return spans


def write_sentence_spans(path: Path, spans: list[SentenceSpan], dim: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "start_ms", "end_ms"] + [f"f{i}" for i in range(dim)])
        for span in spans:
            writer.writerow(
                [span.video_id, span.start_ms, span.end_ms] + [str(v) for v in span.vector]
            )


def align_sentences(
    spans: list[SentenceSpan], frame_count: int, video_id: str = "", modality: str = "text"
) -> FeatureSequence:
    """Average span vectors onto each 500 ms frame they intersect.

    Frame t covers [500t, 500t+500) ms; a span intersects it when the two
    half-open intervals overlap. Frames with no intersecting span get a zero
    vector.
    """
    dims = {len(s.vector) for s in spans}
    if len(dims) > 1:
        raise ValidationError(f"span dimension mismatch: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    out = np.zeros((frame_count, dim), dtype=np.float64)
    counts = np.zeros(frame_count, dtype=np.int64)
    for span in spans:
        first = max(0, span.start_ms // FRAME_MS)
        last = min(frame_count, -(-span.end_ms // FRAME_MS))  # ceil division
        for t in range(first, last):
            out[t] += span.vector
            counts[t] += 1
    nz = counts > 0
    out[nz] /= counts[nz, None]
    return FeatureSequence(video_id=video_id, modality=modality, vectors=out.astype(np.float32))


def _segment_rows(table: SegmentTable, i: int) -> tuple[int, int]:
    start = int(table.start_ms[i]) // FRAME_MS
    return start, start + WINDOW_FRAMES


def segment_sequences(features: FeatureSequence, table: SegmentTable) -> np.ndarray:
    """Per-segment feature windows, shape (n_segments, 4, dim).

    Only the table rows for the features' video are used; a segment reaching
    past the feature matrix is an error naming the segment.
    """
    sel = np.flatnonzero(table.video_id == features.video_id)
    out = np.zeros((len(sel), WINDOW_FRAMES, features.dim), dtype=np.float32)
    for k, i in enumerate(sel):
        lo, hi = _segment_rows(table, i)
        if hi > features.frames:
            raise ValidationError(
                f"segment {table.coach_id[i]}/{table.video_id[i]}/{int(table.segment_index[i])} "
                f"needs frames up to {hi}, features have {features.frames}"
            )
        out[k] = features.vectors[lo:hi]
    return out


def segment_pool(features: FeatureSequence, table: SegmentTable) -> np.ndarray:
    """Mean over each segment's feature rows, shape (n_segments, dim)."""
    return segment_sequences(features, table).mean(axis=1)


def clip_segment_slices(table: SegmentTable, video_id: str) -> list[tuple[int, int]]:
    """Frame ranges [lo, hi) of each of a video's segments, in table order."""
    sel = np.flatnonzero(table.video_id == video_id)
    return [_segment_rows(table, i) for i in sel]

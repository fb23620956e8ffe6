import numpy as np
import pytest

from humorkit.errors import ValidationError
from humorkit.features import (
    FeatureSequence,
    SentenceSpan,
    align_sentences,
    read_feature_csv,
    read_feature_hfz,
    segment_pool,
    segment_sequences,
    write_feature_csv,
    write_feature_hfz,
)
from humorkit.gold import build_segment_table


def random_features(rng, video="v1", modality="audio", frames=12, dim=5):
    return FeatureSequence(video, modality, rng.standard_normal((frames, dim)).astype(np.float32))


def simple_table(n_windows=3, video="v1", coach="c1"):
    humor = {(coach, video): np.ones(n_windows, dtype=np.int8)}
    sent = {(coach, video): np.full(n_windows, 0.5)}
    dire = {(coach, video): np.full(n_windows, 0.5)}
    return build_segment_table(humor, sent, dire)


class TestRoundTrip:
    def test_csv_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        features = random_features(rng)
        path = tmp_path / "v1__audio.csv"
        write_feature_csv(path, features)
        loaded = read_feature_csv(path, "v1", "audio")
        assert np.array_equal(loaded.vectors, features.vectors)
        assert loaded.vectors.dtype == np.float32

    def test_hfz_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        features = random_features(rng, modality="video", frames=20, dim=3)
        path = tmp_path / "v1__video.hfz"
        write_feature_hfz(path, features)
        loaded = read_feature_hfz(path)
        assert loaded.video_id == "v1" and loaded.modality == "video"
        assert np.array_equal(loaded.vectors, features.vectors)

    def test_hfz_bad_magic(self, tmp_path):
        path = tmp_path / "bad.hfz"
        path.write_bytes(b"NOPE" + b"v,audio,1,1\n" + b"\x00" * 4)
        with pytest.raises(ValidationError, match="magic"):
            read_feature_hfz(path)

    def test_hfz_truncated_payload(self, tmp_path):
        rng = np.random.default_rng(2)
        features = random_features(rng, frames=4, dim=2)
        path = tmp_path / "t.hfz"
        write_feature_hfz(path, features)
        data = path.read_bytes()
        path.write_bytes(data[:-4])
        with pytest.raises(ValidationError, match="payload"):
            read_feature_hfz(path)

    def test_csv_grid_validated(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t_ms,f0\n0,1.0\n700,2.0\n")
        with pytest.raises(ValidationError, match="grid"):
            read_feature_csv(path, "v", "audio")


class TestAlignSentences:
    def test_single_full_cover_span(self):
        vec = np.array([1.0, 2.0], dtype=np.float32)
        spans = [SentenceSpan("v1", 0, 3000, vec)]
        out = align_sentences(spans, 6)
        assert np.allclose(out.vectors, np.tile(vec, (6, 1)))

    def test_overlapping_spans_average(self):
        u = np.array([2.0], dtype=np.float32)
        v = np.array([4.0], dtype=np.float32)
        spans = [SentenceSpan("v1", 0, 1000, u), SentenceSpan("v1", 0, 1000, v)]
        out = align_sentences(spans, 2)
        assert np.allclose(out.vectors, [[3.0], [3.0]])

    def test_gap_yields_zero_row(self):
        spans = [SentenceSpan("v1", 0, 500, np.array([1.0], dtype=np.float32))]
        out = align_sentences(spans, 3)
        assert np.allclose(out.vectors, [[1.0], [0.0], [0.0]])

    def test_partial_overlap_counts(self):
        # span [250, 750) intersects frames 0 and 1 but not 2
        spans = [SentenceSpan("v1", 250, 750, np.array([1.0], dtype=np.float32))]
        out = align_sentences(spans, 3)
        assert np.allclose(out.vectors, [[1.0], [1.0], [0.0]])

    def test_dimension_mismatch_rejected(self):
        spans = [
            SentenceSpan("v1", 0, 500, np.array([1.0], dtype=np.float32)),
            SentenceSpan("v1", 500, 1000, np.array([1.0, 2.0], dtype=np.float32)),
        ]
        with pytest.raises(ValidationError, match="dimension"):
            align_sentences(spans, 2)

    def test_invalid_span_rejected(self):
        with pytest.raises(ValidationError):
            SentenceSpan("v1", 1000, 1000, np.array([1.0]))


class TestSegmentViews:
    def test_first_window_rows(self):
        rng = np.random.default_rng(3)
        features = random_features(rng, frames=8)
        table = simple_table(n_windows=3)
        seqs = segment_sequences(features, table)
        assert seqs.shape == (3, 4, 5)
        assert np.array_equal(seqs[0], features.vectors[0:4])

    def test_consecutive_windows_overlap_two_rows(self):
        rng = np.random.default_rng(4)
        features = random_features(rng, frames=10)
        table = simple_table(n_windows=4)
        seqs = segment_sequences(features, table)
        assert np.array_equal(seqs[0][2:], seqs[1][:2])

    def test_truncated_features_rejected_naming_segment(self):
        rng = np.random.default_rng(5)
        features = random_features(rng, frames=5)  # window 1 needs rows 2..5
        table = simple_table(n_windows=2)
        with pytest.raises(ValidationError, match="c1/v1/1"):
            segment_sequences(features, table)

    def test_pool_equals_row_mean(self):
        rng = np.random.default_rng(6)
        features = random_features(rng, frames=12)
        table = simple_table(n_windows=5)
        pooled = segment_pool(features, table)
        seqs = segment_sequences(features, table)
        assert np.allclose(pooled, seqs.mean(axis=1))

    def test_pool_hand_example(self):
        vectors = np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=np.float32)
        features = FeatureSequence("v1", "audio", vectors)
        table = simple_table(n_windows=1)
        pooled = segment_pool(features, table)
        assert np.allclose(pooled, [[0.5, 0.5]])

    def test_identical_rows_pool_to_row(self):
        vectors = np.tile(np.array([2.0, -1.0], dtype=np.float32), (4, 1))
        features = FeatureSequence("v1", "audio", vectors)
        pooled = segment_pool(features, simple_table(n_windows=1))
        assert np.allclose(pooled, [[2.0, -1.0]])

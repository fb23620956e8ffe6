"""Synthetic desk-scale corpus with planted ground truth.

The generator plants humor episodes (style drawn from a configurable 2x2
distribution over direction x sentiment), simulates raters as ground truth
plus per-rater gain, lag, missed and spurious episodes, and frame jitter, and
emits 2 Hz feature files in which the planted signal is strongest in the
video channel, weaker in text, and weakest in audio. With noise 0 every
rater reproduces the ground truth exactly. All randomness flows from the
seed; identical configs produce identical corpora.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .features import FeatureSequence, SentenceSpan
from .preprocess import FRAME_MS, AnnotationSignal

# Style proportions over (direction sign, sentiment sign), normalized from the
# observed distribution they mimic: self/neg, self/pos, other/neg, other/pos.
DEFAULT_STYLE_PROPS = (0.0427, 0.2229, 0.2560, 0.4759)

STYLE_SIGNS = ((-1, -1), (-1, 1), (1, -1), (1, 1))  # (direction, sentiment)

FEATURE_DIMS = {"audio": 6, "text": 8, "video": 6}


@dataclass(frozen=True)
class SynthConfig:
    coaches: int = 4
    annotators: int = 9
    minutes: float = 5.0  # recording minutes per coach
    videos_per_coach: int = 3
    noise: float = 0.3  # master rater-noise level, 0 = perfect raters
    episodes_per_minute: float = 2.0
    style_props: tuple[float, float, float, float] = DEFAULT_STYLE_PROPS
    audio_noise: float = 0.9
    text_noise: float = 0.35
    video_noise: float = 0.08
    seed: int = 0

    def __post_init__(self):
        if self.coaches < 1 or self.annotators < 1 or self.videos_per_coach < 1:
            raise ValidationError("counts must be >= 1")
        if self.minutes <= 0:
            raise ValidationError("minutes must be > 0")
        if self.noise < 0:
            raise ValidationError("noise must be >= 0")
        if any(p < 0 for p in self.style_props) or sum(self.style_props) <= 0:
            raise ValidationError("style proportions must be nonnegative with positive sum")


@dataclass
class Episode:
    start: int  # frame
    end: int  # frame, exclusive
    direction_sign: int
    sentiment_sign: int
    sentiment_amp: float
    direction_amp: float


@dataclass
class SynthCorpus:
    config: SynthConfig
    coaches: list[str]
    video_coach: dict[str, str]  # video_id -> coach_id
    video_frames: dict[str, int]
    episodes: dict[str, list[Episode]]
    truth_sentiment: dict[str, np.ndarray]
    truth_direction: dict[str, np.ndarray]
    annotations: list[AnnotationSignal] = field(default_factory=list)
    features: dict[tuple[str, str], FeatureSequence] = field(default_factory=dict)
    sentences: dict[str, list[SentenceSpan]] = field(default_factory=dict)

    @property
    def annotator_ids(self) -> list[str]:
        return sorted({s.annotator_id for s in self.annotations})

    def truth_humor(self, video_id: str) -> np.ndarray:
        return (
            (self.truth_sentiment[video_id] != 0) | (self.truth_direction[video_id] != 0)
        ).astype(np.int8)


def _plant_episodes(rng: np.random.Generator, n_frames: int, config: SynthConfig) -> list[Episode]:
    minutes = n_frames / 120.0
    count = max(1, int(rng.poisson(config.episodes_per_minute * minutes)))
    props = np.asarray(config.style_props, dtype=np.float64)
    props = props / props.sum()
    episodes: list[Episode] = []
    occupied = np.zeros(n_frames, dtype=bool)
    for _ in range(count):
        duration = int(rng.integers(4, 11))
        if n_frames <= duration + 2:
            continue
        start = int(rng.integers(0, n_frames - duration))
        if occupied[max(0, start - 2) : start + duration + 2].any():
            continue  # keep episodes separated by at least one silent frame
        occupied[start : start + duration] = True
        d_sign, s_sign = STYLE_SIGNS[int(rng.choice(4, p=props))]
        episodes.append(
            Episode(
                start=start,
                end=start + duration,
                direction_sign=d_sign,
                sentiment_sign=s_sign,
                sentiment_amp=s_sign * rng.uniform(0.35, 0.95),
                direction_amp=d_sign * rng.uniform(0.35, 0.95),
            )
        )
    episodes.sort(key=lambda e: e.start)
    return episodes


@dataclass
class _RaterProfile:
    gain: float
    lag: int
    p_miss: float
    fp_per_minute: float
    jitter: float


def _rater_profiles(rng: np.random.Generator, config: SynthConfig) -> list[_RaterProfile]:
    profiles = []
    for _ in range(config.annotators):
        quality = rng.uniform(0.0, 1.0)
        u = config.noise * (0.15 + 0.85 * (1.0 - quality))
        profiles.append(
            _RaterProfile(
                gain=1.0 + u * rng.normal(0.0, 0.25),
                lag=int(np.round(u * rng.normal(0.0, 1.5))),
                p_miss=min(0.9, 0.6 * u),
                fp_per_minute=0.5 * u,
                jitter=0.15 * u,
            )
        )
    return profiles


def _rate_video(
    rng: np.random.Generator,
    episodes: list[Episode],
    n_frames: int,
    profile: _RaterProfile,
) -> tuple[np.ndarray, np.ndarray]:
    """One rater's (sentiment, direction) signals for one video."""
    sent = np.zeros(n_frames)
    dire = np.zeros(n_frames)
    for ep in episodes:
        if rng.random() < profile.p_miss:
            continue
        lo = max(0, ep.start + profile.lag)
        hi = min(n_frames, ep.end + profile.lag)
        if lo >= hi:
            continue
        length = hi - lo
        sent[lo:hi] = ep.sentiment_amp * profile.gain + rng.normal(0.0, profile.jitter, length)
        dire[lo:hi] = ep.direction_amp * profile.gain + rng.normal(0.0, profile.jitter, length)
    n_fp = rng.poisson(profile.fp_per_minute * n_frames / 120.0)
    for _ in range(n_fp):
        duration = int(rng.integers(2, 5))
        if n_frames <= duration:
            continue
        start = int(rng.integers(0, n_frames - duration))
        sent[start : start + duration] = rng.uniform(-0.8, 0.8)
        dire[start : start + duration] = rng.uniform(-0.8, 0.8)
    np.clip(sent, -1.0, 1.0, out=sent)
    np.clip(dire, -1.0, 1.0, out=dire)
    return sent, dire


def _smooth(x: np.ndarray) -> np.ndarray:
    padded = np.pad(x, 1, mode="edge")
    return (padded[:-2] + padded[1:-1] + padded[2:]) / 3.0


def _make_features(
    rng: np.random.Generator,
    video_id: str,
    sent: np.ndarray,
    dire: np.ndarray,
    config: SynthConfig,
) -> tuple[dict[str, FeatureSequence], list[SentenceSpan]]:
    n = len(sent)
    envelope = _smooth(((sent != 0) | (dire != 0)).astype(np.float64))

    def channels(main_noise: float, dim: int) -> np.ndarray:
        out = np.empty((n, dim))
        out[:, 0] = envelope + rng.normal(0.0, main_noise, n)
        out[:, 1] = 0.8 * sent + rng.normal(0.0, max(main_noise, 0.05), n)
        out[:, 2] = 0.8 * dire + rng.normal(0.0, max(main_noise, 0.05), n)
        out[:, 3:] = rng.normal(0.0, 1.0, (n, dim - 3))
        return out

    audio = FeatureSequence(video_id, "audio", channels(config.audio_noise, FEATURE_DIMS["audio"]))
    video = FeatureSequence(video_id, "video", channels(config.video_noise, FEATURE_DIMS["video"]))

    spans: list[SentenceSpan] = []
    t_ms = 0
    total_ms = n * FRAME_MS
    dim = FEATURE_DIMS["text"]
    while t_ms < total_ms:
        span_ms = int(rng.integers(8, 25)) * 250  # 2..6 s sentences
        end_ms = min(total_ms, t_ms + span_ms)
        lo, hi = t_ms // FRAME_MS, max(t_ms // FRAME_MS + 1, -(-end_ms // FRAME_MS))
        hi = min(hi, n)
        vec = np.empty(dim)
        vec[0] = envelope[lo:hi].mean() + rng.normal(0.0, config.text_noise)
        vec[1] = 0.8 * sent[lo:hi].mean() + rng.normal(0.0, config.text_noise)
        vec[2] = 0.8 * dire[lo:hi].mean() + rng.normal(0.0, config.text_noise)
        vec[3:] = rng.normal(0.0, 1.0, dim - 3)
        spans.append(SentenceSpan(video_id, t_ms, end_ms, vec))
        t_ms = end_ms
    return {"audio": audio, "video": video}, spans


def generate_corpus(config: SynthConfig) -> SynthCorpus:
    """Build a complete in-memory corpus; see module docstring for the model."""
    rng = np.random.default_rng(config.seed)
    frames_per_video = max(4, int(round(config.minutes * 60 * 2 / config.videos_per_coach)))

    coaches = [f"c{i + 1:02d}" for i in range(config.coaches)]
    annotator_ids = [f"a{i + 1:02d}" for i in range(config.annotators)]
    profiles = _rater_profiles(rng, config)

    corpus = SynthCorpus(
        config=config,
        coaches=coaches,
        video_coach={},
        video_frames={},
        episodes={},
        truth_sentiment={},
        truth_direction={},
        annotations=[],
        features={},
        sentences={},
    )

    for coach in coaches:
        for vi in range(config.videos_per_coach):
            video_id = f"{coach}_v{vi + 1:02d}"
            corpus.video_coach[video_id] = coach
            corpus.video_frames[video_id] = frames_per_video
            episodes = _plant_episodes(rng, frames_per_video, config)
            corpus.episodes[video_id] = episodes

            sent = np.zeros(frames_per_video)
            dire = np.zeros(frames_per_video)
            for ep in episodes:
                sent[ep.start : ep.end] = ep.sentiment_amp
                dire[ep.start : ep.end] = ep.direction_amp
            corpus.truth_sentiment[video_id] = sent
            corpus.truth_direction[video_id] = dire

            for ann, profile in zip(annotator_ids, profiles):
                if config.noise == 0:
                    r_sent, r_dir = sent.copy(), dire.copy()
                else:
                    r_sent, r_dir = _rate_video(rng, episodes, frames_per_video, profile)
                corpus.annotations.append(
                    AnnotationSignal(coach, video_id, ann, "sentiment", r_sent)
                )
                corpus.annotations.append(
                    AnnotationSignal(coach, video_id, ann, "direction", r_dir)
                )

            feats, spans = _make_features(rng, video_id, sent, dire, config)
            corpus.features[(video_id, "audio")] = feats["audio"]
            corpus.features[(video_id, "video")] = feats["video"]
            corpus.sentences[video_id] = spans

    return corpus

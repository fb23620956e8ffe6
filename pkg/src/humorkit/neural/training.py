"""Verified training loop: BCE loss, AdamW, dev-AUC early stopping.

Training is fully deterministic given the seed: parameter initialization is
owned by the model constructor (same seed), while shuffling and dropout draw
from streams spawned off the training seed here.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError, ValidationError
from ..evaluate import roc_auc
from .autodiff import Tensor, bce_on_probabilities, bce_with_logits, concat, stable_sigmoid
from .models import GruModel, VfmmModel

DEFAULT_SEEDS = (11, 23, 42, 77, 101)


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 20
    patience: int = 5
    learning_rate: float = 1e-2
    weight_decay: float = 1e-2
    batch_size: int = 16
    seeds: tuple[int, ...] = DEFAULT_SEEDS

    def __post_init__(self):
        if not self.patience < self.max_epochs:
            raise ValidationError("patience must be < max_epochs")


class AdamW:
    """Adaptive moments with decoupled weight decay, fixed parameter order."""

    def __init__(self, params: dict[str, Tensor], lr: float, weight_decay: float,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.names = sorted(params)
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.b1, self.b2 = betas
        self.eps = eps
        self.m = {n: np.zeros_like(params[n].data) for n in self.names}
        self.v = {n: np.zeros_like(params[n].data) for n in self.names}
        self.t = 0

    def zero_grad(self) -> None:
        for name in self.names:
            self.params[name].zero_grad()

    def step(self) -> None:
        self.t += 1
        for name in self.names:
            p = self.params[name]
            if p.grad is None:
                continue
            p.data -= self.lr * self.weight_decay * p.data
            self.m[name] = self.b1 * self.m[name] + (1.0 - self.b1) * p.grad
            self.v[name] = self.b2 * self.v[name] + (1.0 - self.b2) * p.grad**2
            m_hat = self.m[name] / (1.0 - self.b1**self.t)
            v_hat = self.v[name] / (1.0 - self.b2**self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    dev_auc: float
    improved: bool


@dataclass
class TrainResult:
    history: list[EpochStats]
    best_epoch: int
    best_dev_auc: float
    stopped_early: bool


class GruTask:
    """Binary humor recognition on per-segment feature windows (one modality)."""

    def __init__(self, model: GruModel, x: np.ndarray, labels: np.ndarray, roles: np.ndarray):
        self.model = model
        self.x = np.asarray(x, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.float64)
        self.roles = np.asarray(roles)
        self.train_idx = np.flatnonzero(self.roles == "train")
        self.dev_idx = np.flatnonzero(self.roles == "dev")
        self.test_idx = np.flatnonzero(self.roles == "test")

    @property
    def n_train(self) -> int:
        return len(self.train_idx)

    def loss(self, batch: np.ndarray, rng=None, training: bool = True) -> Tensor:
        idx = self.train_idx[batch]
        logits = self.model.forward(self.x[idx])
        return bce_with_logits(logits, self.labels[idx])

    def _scores(self, idx: np.ndarray) -> np.ndarray:
        scores = np.empty(len(idx))
        for lo in range(0, len(idx), 256):
            chunk = idx[lo : lo + 256]
            scores[lo : lo + len(chunk)] = stable_sigmoid(self.model.forward(self.x[chunk]).data)
        return scores

    def role_scores(self, role: str) -> tuple[np.ndarray, np.ndarray]:
        idx = {"train": self.train_idx, "dev": self.dev_idx, "test": self.test_idx}[role]
        return self._scores(idx), self.labels[idx]


@dataclass
class Clip:
    """One video's aligned modality matrices plus its rows in the segment table."""

    coach_id: str
    video_id: str
    text: np.ndarray
    audio: np.ndarray
    video: np.ndarray
    seg_slices: list[tuple[int, int]]  # frame ranges of this clip's segments
    seg_positions: np.ndarray  # indices into the global segment arrays

    def pool_matrix(self) -> np.ndarray:
        """Constant (n_segments, T) matrix averaging frame probs per segment."""
        n_frames = len(self.video)
        pool = np.zeros((len(self.seg_slices), n_frames))
        for i, (lo, hi) in enumerate(self.seg_slices):
            pool[i, lo:hi] = 1.0 / (hi - lo)
        return pool


class VfmmTask:
    """Full-clip humor recognition; per-frame probabilities mean-pooled to segments."""

    def __init__(self, model: VfmmModel, clips: list[Clip], labels: np.ndarray, roles: np.ndarray):
        self.model = model
        self.clips = sorted(clips, key=lambda c: (c.coach_id, c.video_id))
        self.labels = np.asarray(labels, dtype=np.float64)
        self.roles = np.asarray(roles)
        self._pools = [Tensor(c.pool_matrix()) for c in self.clips]

    @property
    def n_train(self) -> int:
        return len(self.clips)

    def _segment_probs(self, i: int, rng=None, training: bool = False) -> Tensor:
        clip = self.clips[i]
        frame_probs = self.model.forward(
            clip.text, clip.audio, clip.video, rng=rng, training=training
        )
        return self._pools[i] @ frame_probs.reshape(len(clip.video), 1)

    def loss(self, batch: np.ndarray, rng=None, training: bool = True) -> Tensor:
        probs = []
        targets = []
        for i in batch:
            clip = self.clips[int(i)]
            mask = self.roles[clip.seg_positions] == "train"
            if not np.any(mask):
                continue
            seg_probs = self._segment_probs(int(i), rng=rng, training=training)
            probs.append(seg_probs[np.flatnonzero(mask)])
            targets.append(self.labels[clip.seg_positions[mask]])
        if not probs:
            return Tensor(0.0)
        flat = concat(probs, axis=0).reshape(sum(len(t) for t in targets))
        return bce_on_probabilities(flat, np.concatenate(targets))

    def role_scores(self, role: str) -> tuple[np.ndarray, np.ndarray]:
        scores = np.full(len(self.labels), np.nan)
        for i, clip in enumerate(self.clips):
            mask = self.roles[clip.seg_positions] == role
            if not np.any(mask):
                continue
            seg_probs = self._segment_probs(i).data.reshape(-1)
            scores[clip.seg_positions[mask]] = seg_probs[mask]
        idx = np.flatnonzero(self.roles == role)
        return scores[idx], self.labels[idx]


def _snapshot(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in params.items()}


def _restore(params: dict[str, Tensor], snap: dict[str, np.ndarray]) -> None:
    for name, data in snap.items():
        params[name].data = data.copy()


def train(task, config: TrainConfig, seed: int) -> TrainResult:
    """Minimize BCE with AdamW, early-stopping on dev AUC.

    Stops after `patience` epochs without dev-AUC improvement, never exceeding
    `max_epochs`, and restores the parameters of the best-dev-AUC epoch.
    Raises NumericalError on a non-finite loss.
    """
    shuffle_ss, dropout_ss = np.random.SeedSequence(seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss)

    params = task.model.parameters()
    lr = config.learning_rate
    model_lr = getattr(task.model.config, "learning_rate", None)
    if model_lr is not None:
        lr = model_lr
    opt = AdamW(params, lr=lr, weight_decay=config.weight_decay)

    best_auc = -np.inf
    best_epoch = 0
    best_params = _snapshot(params)
    history: list[EpochStats] = []
    stopped_early = False

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(task.n_train)
        losses = []
        for lo in range(0, len(order), config.batch_size):
            batch = order[lo : lo + config.batch_size]
            opt.zero_grad()
            loss = task.loss(batch, rng=dropout_rng, training=True)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericalError(
                    f"non-finite training loss {value} at epoch {epoch}, batch {lo // config.batch_size}"
                )
            loss.backward()
            opt.step()
            losses.append(value)

        dev_scores, dev_labels = task.role_scores("dev")
        if len(np.unique(dev_labels)) < 2:
            warnings.warn("single-class dev labels; dev AUC fixed at 0.5")
            dev_auc = 0.5
        else:
            dev_auc = roc_auc(dev_scores, dev_labels)
        improved = dev_auc > best_auc
        if improved:
            best_auc = dev_auc
            best_epoch = epoch
            best_params = _snapshot(params)
        history.append(
            EpochStats(epoch, float(np.mean(losses)) if losses else 0.0, dev_auc, improved)
        )
        if epoch - best_epoch >= config.patience:
            stopped_early = True
            break

    _restore(params, best_params)
    return TrainResult(
        history=history,
        best_epoch=best_epoch,
        best_dev_auc=float(best_auc),
        stopped_early=stopped_early,
    )

"""Scoring and decision-level fusion.

ROC-AUC uses the tie-corrected Mann-Whitney statistic. Platt scaling fits a
logistic calibration to externally produced classifier scores by regularized
maximum likelihood with smoothed targets. Late fusion z-standardizes each
prediction set and weights it by its training quality minus chance level
(floored at 0). The leave-one-subject-out harness aggregates per-coach AUCs
into the mean/std/min/max and percent-above-chance layout.
"""

import warnings
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalError, ValidationError

CHANCE_LEVEL = 0.5


@dataclass(frozen=True)
class PredictionSet:
    """Per-segment scores of one model/modality for one task."""

    task: str  # humor | sentiment | direction
    source: str  # modality or model tag
    keys: tuple
    scores: np.ndarray
    training_quality: float | None = None  # train AUC (SVM path) / best dev AUC (neural)

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(self.keys))
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=np.float64))
        if len(self.keys) != len(self.scores):
            raise ValidationError("one score per segment key required")
        if len(set(self.keys)) != len(self.keys):
            raise ValidationError("duplicate segment keys in prediction set")
        if self.training_quality is not None and not 0.0 <= self.training_quality <= 1.0:
            raise ValidationError("training_quality must be in [0, 1]")


def _tied_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average rank (exact halves)."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0  # average of ranks i+1 .. j+1
        i = j + 1
    return ranks


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Probability that a random positive outranks a random negative.

    Ties count 0.5 (Mann-Whitney formulation). Raises on single-class labels.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValidationError(f"scores/labels shape mismatch: {scores.shape} vs {labels.shape}")
    pos = labels == np.max(labels)
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0 or len(np.unique(labels)) < 2:
        raise ValidationError("AUC undefined: labels contain a single class")
    ranks = _tied_ranks(scores)
    return (ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class PlattCalibration:
    """Logistic calibration p(s) = 1 / (1 + exp(A*s + B))."""

    a: float
    b: float

    def __call__(self, scores) -> np.ndarray:
        z = self.a * np.asarray(scores, dtype=np.float64) + self.b
        e = np.exp(-np.abs(z))  # 1/(1+exp(z)), stable on both sides
        return np.where(z >= 0, e / (1.0 + e), 1.0 / (1.0 + e))


def platt_scale(
    scores: np.ndarray, labels: np.ndarray, max_iter: int = 100, tol: float = 1e-10
) -> PlattCalibration:
    """Fit the calibration by damped Newton on the smoothed-target likelihood.

    Targets are (N+ + 1)/(N+ + 2) for positives and 1/(N- + 2) for negatives,
    which keeps the optimum finite even for separable scores. Raises
    NumericalError if the gradient has not dropped below `tol` (infinity
    norm) within `max_iter` iterations.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValidationError("scores/labels shape mismatch")
    pos = y == np.max(y)
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("Platt scaling needs both classes in the training labels")

    t = np.where(pos, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a, b = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    ridge = 1e-12
    min_step = 1e-10

    def objective(a_, b_):
        f = a_ * s + b_
        # -sum t*log(p) + (1-t)*log(1-p) with p = 1/(1+exp(f)), stably:
        return float(np.sum(np.where(f >= 0, t * f + np.logaddexp(0.0, -f), (t - 1.0) * f + np.logaddexp(0.0, f))))

    fval = objective(a, b)
    for _ in range(max_iter):
        f = a * s + b
        e = np.exp(-np.abs(f))  # p = 1/(1+exp(f)), stable on both sides
        p = np.where(f >= 0, e / (1.0 + e), 1.0 / (1.0 + e))
        q = 1.0 - p
        d2 = p * q
        h11 = float(np.sum(s * s * d2)) + ridge
        h22 = float(np.sum(d2)) + ridge
        h21 = float(np.sum(s * d2))
        d1 = t - p
        g1 = float(np.sum(s * d1))
        g2 = float(np.sum(d1))
        if max(abs(g1), abs(g2)) < tol:
            return PlattCalibration(a, b)
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(h11 * g2 - h21 * g1) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= min_step:
            new_a, new_b = a + step * da, b + step * db
            new_f = objective(new_a, new_b)
            if new_f < fval + 1e-4 * step * gd:
                a, b, fval = new_a, new_b, new_f
                break
            step /= 2.0
        else:
            raise NumericalError(
                f"Platt line search failed (gradient {max(abs(g1), abs(g2)):.3e})"
            )
    raise NumericalError(
        f"Platt scaling did not converge in {max_iter} iterations "
        f"(gradient {max(abs(g1), abs(g2)):.3e}, tol {tol})"
    )


def z_standardize(predictions: PredictionSet) -> PredictionSet:
    """Zero-mean, unit population-std scores; constant sets map to zeros."""
    scores = predictions.scores
    if len(scores) < 2:
        raise ValidationError("z_standardize needs at least 2 scores")
    if np.all(scores == scores[0]):
        warnings.warn(f"constant scores in {predictions.source}; standardized to zeros")
        return replace(predictions, scores=np.zeros_like(scores))
    return replace(predictions, scores=(scores - np.mean(scores)) / np.std(scores))


def fusion_weight(training_quality: float) -> float:
    """Late-fusion weight: training quality reduced by chance, floored at 0."""
    return max(training_quality - CHANCE_LEVEL, 0.0)


def late_fuse(sets: Sequence[PredictionSet]) -> PredictionSet:
    """Weighted sum of z-standardized prediction sets.

    Weights are each set's training quality minus 0.5, floored at 0 (a
    chance-level model contributes nothing). If every weight is 0 the result
    is the unweighted mean of the standardized scores, with a warning.
    """
    if not sets:
        raise ValidationError("late_fuse needs at least one prediction set")
    key_set = set(sets[0].keys)
    for p in sets[1:]:
        if set(p.keys) != key_set:
            raise ValidationError(f"segment keys of {p.source} do not match {sets[0].source}")
    for p in sets:
        if p.training_quality is None:
            raise ValidationError(f"prediction set {p.source} has no training_quality")

    ordered_keys = tuple(sorted(key_set))
    weights = [fusion_weight(p.training_quality) for p in sets]
    aligned = []
    for p in sets:
        z = z_standardize(p)
        index = {k: i for i, k in enumerate(z.keys)}
        aligned.append(z.scores[[index[k] for k in ordered_keys]])
    if all(w == 0.0 for w in weights):
        warnings.warn("all fusion weights are 0; falling back to unweighted mean")
        fused = np.mean(aligned, axis=0)
    else:
        fused = np.zeros(len(ordered_keys))
        for w, scores in zip(weights, aligned):
            fused += w * scores
    source = "latefuse(" + "+".join(p.source for p in sets) + ")"
    return PredictionSet(
        task=sets[0].task, source=source, keys=ordered_keys, scores=fused, training_quality=None
    )


@dataclass
class ResultsTable:
    """Per-coach mean/std AUC over seeds plus cross-coach aggregates."""

    source: str
    per_coach_mean: dict[str, float]
    per_coach_std: dict[str, float]
    mean: float
    std: float
    min: float
    max: float
    pct_above_chance: float
    excluded_folds: list[tuple[str, int]]


def aggregate_results(
    source: str, cell_aucs: Mapping[tuple[str, int], float | None]
) -> ResultsTable:
    """Aggregate per-(coach, seed) AUC cells into the results-table layout.

    Cells with value None (e.g. single-class folds) are excluded from the
    aggregates and reported in `excluded_folds`.
    """
    per_coach: dict[str, list[float]] = {}
    excluded = []
    for (coach, seed), auc in sorted(cell_aucs.items()):
        if auc is None:
            excluded.append((coach, seed))
            continue
        per_coach.setdefault(coach, []).append(auc)
    if not per_coach:
        raise ValidationError("no evaluable folds")
    coach_mean = {c: float(np.mean(v)) for c, v in per_coach.items()}
    coach_std = {c: float(np.std(v)) for c, v in per_coach.items()}
    means = np.array([coach_mean[c] for c in sorted(coach_mean)])
    return ResultsTable(
        source=source,
        per_coach_mean=coach_mean,
        per_coach_std=coach_std,
        mean=float(np.mean(means)),
        std=float(np.std(means)),
        min=float(np.min(means)),
        max=float(np.max(means)),
        pct_above_chance=float(np.mean(means > CHANCE_LEVEL) * 100.0),
        excluded_folds=excluded,
    )


def loso_harness(
    fold_runner: Callable[[str, int], tuple[np.ndarray, np.ndarray]],
    coaches: Sequence[str],
    seeds: Sequence[int],
    source: str = "model",
) -> ResultsTable:
    """Run fold_runner(held_out_coach, seed) -> (test scores, test labels) per cell.

    Folds whose test labels contain a single class are flagged and excluded
    from the aggregates with a warning.
    """
    if len(coaches) < 2:
        raise ValidationError("leave-one-subject-out needs >= 2 coaches")
    cells: dict[tuple[str, int], float | None] = {}
    for coach in sorted(coaches):
        for seed in seeds:
            scores, labels = fold_runner(coach, seed)
            if len(np.unique(labels)) < 2:
                warnings.warn(f"fold ({coach}, seed {seed}) has single-class test labels; excluded")
                cells[(coach, seed)] = None
            else:
                cells[(coach, seed)] = roc_auc(scores, labels)
    return aggregate_results(source, cells)


def format_results_text(tables: Sequence[ResultsTable], task: str) -> str:
    """Aligned plain-text table: Mean (Std) / Min / Max / > Chance per source."""
    width = max([len(t.source) for t in tables] + [8])
    lines = [
        f"Task: {task}",
        f"{'Source':<{width}}  {'Mean (Std)':>16}  {'Min':>7}  {'Max':>7}  {'> Chance':>9}",
    ]
    for t in tables:
        lines.append(
            f"{t.source:<{width}}  {t.mean:.4f} (±{t.std:.4f})  {t.min:.4f}  {t.max:.4f}  {t.pct_above_chance:>7.0f} %"
        )
    return "\n".join(lines) + "\n"


def comparison_table(per_source_coach_mean: Mapping[str, Mapping[str, float]]) -> str:
    """Per-coach comparison: best mean AUC per source plus the coach's rank.

    Rank sorts coaches by their best AUC across sources, best first.
    """
    sources = sorted(per_source_coach_mean)
    coaches = sorted({c for per in per_source_coach_mean.values() for c in per})
    best = {}
    for coach in coaches:
        values = [per_source_coach_mean[s].get(coach) for s in sources]
        best[coach] = max(v for v in values if v is not None)
    ranking = {c: r + 1 for r, c in enumerate(sorted(coaches, key=lambda c: -best[c]))}
    width = max(max(len(c) for c in coaches), 5)
    header = f"{'Coach':<{width}}  " + "  ".join(f"{s:>10}" for s in sources) + f"  {'Rank':>4}"
    lines = [header]
    for coach in coaches:
        cells = []
        for s in sources:
            v = per_source_coach_mean[s].get(coach)
            cells.append(f"{v:>10.4f}" if v is not None else f"{'-':>10}")
        lines.append(f"{coach:<{width}}  " + "  ".join(cells) + f"  {ranking[coach]:>4}")
    return "\n".join(lines) + "\n"

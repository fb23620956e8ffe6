"""Inter-rater agreement statistics on 2 Hz annotation signals.

Covers concordance correlation (Lin's CCC with population moments), nominal
Krippendorff's alpha in the coincidence-matrix formulation, frame-level binary
humor labels, Jaccard overlap, and the per-coach/per-rater mean-agreement
matrix used for reporting.
"""

from collections.abc import Mapping, Sequence

import numpy as np

from .errors import ValidationError

# Discretized class codes; label names depend on the dimension:
# sentiment: -1 = negative, +1 = positive; direction: -1 = self, +1 = other.
CLASS_NONE = 0


def ccc(x: np.ndarray, y: np.ndarray) -> float:
    """Lin's concordance correlation coefficient with population moments.

    Returns 2*cov(x,y) / (var(x) + var(y) + (mean(x)-mean(y))^2), and 0 by
    convention when the denominator is 0 (both signals constant).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValidationError(f"ccc length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValidationError("ccc requires at least 2 samples")
    dx = x - np.mean(x)
    dy = y - np.mean(y)
    cov = float(np.mean(dx * dy))
    var_x = float(np.mean(dx * dx))
    var_y = float(np.mean(dy * dy))
    denom = var_x + var_y + (np.mean(x) - np.mean(y)) ** 2
    if denom == 0.0:
        return 0.0
    return 2.0 * cov / denom


def discretize(values: np.ndarray) -> np.ndarray:
    """Map a continuous signal to three classes by sign: -1, 0 (none), +1."""
    return np.sign(np.asarray(values, dtype=np.float64)).astype(np.int8)


def binary_humor(sentiment: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Frame is humorous (1) iff either dimension is nonzero, sign ignored."""
    sentiment = np.asarray(sentiment)
    direction = np.asarray(direction)
    if sentiment.shape != direction.shape:
        raise ValidationError(
            f"binary_humor length mismatch: {sentiment.shape} vs {direction.shape}"
        )
    return ((sentiment != 0) | (direction != 0)).astype(np.int8)


def _label_counts(matrix: np.ndarray) -> np.ndarray:
    """Units x classes count matrix n_uc from an annotators x units label matrix."""
    _, inverse = np.unique(matrix, return_inverse=True)
    codes = inverse.reshape(matrix.shape)
    n_classes = int(codes.max()) + 1
    counts = np.zeros((matrix.shape[1], n_classes), dtype=np.int64)
    for row in codes:
        np.add.at(counts, (np.arange(matrix.shape[1]), row), 1)
    return counts


def krippendorff_alpha(matrix: Sequence[Sequence] | np.ndarray) -> float:
    """Nominal Krippendorff's alpha, coincidence-matrix form, no missing cells.

    `matrix` has one row per annotator and one column per unit (time step).
    Labels may be any hashable values. Returns 1.0 when expected disagreement
    is zero (all values identical), which implies observed disagreement zero.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] < 2 or matrix.shape[1] < 1:
        raise ValidationError("reliability matrix needs >= 2 annotators and >= 1 unit")

    counts = _label_counts(matrix)  # units x classes
    m = matrix.shape[0]  # raters per unit (no missing data)
    # Coincidence matrix: o_ck = sum_u n_uc * (n_uk - delta_ck) / (m - 1)
    o = (counts.T @ counts).astype(np.float64)
    np.fill_diagonal(o, np.diag(o) - counts.sum(axis=0))
    o /= m - 1

    n_c = counts.sum(axis=0).astype(np.float64)
    n = float(n_c.sum())
    d_o = (o.sum() - np.trace(o)) / n
    d_e = (n_c.sum() ** 2 - (n_c**2).sum()) / (n * (n - 1.0))
    if d_e == 0.0:
        return 1.0
    return 1.0 - d_o / d_e


def jaccard(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two binary sequences; 1.0 when both empty."""
    a = np.asarray(a).astype(bool)
    b = np.asarray(b).astype(bool)
    if a.shape != b.shape:
        raise ValidationError(f"jaccard length mismatch: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def mean_agreement_matrix(
    labels: Mapping[str, Mapping[str, np.ndarray]],
) -> tuple[list[str], list[str], np.ndarray]:
    """Per-coach, per-rater mean pairwise alpha on binary humor labels.

    `labels[coach][annotator]` holds that annotator's frame-level binary humor
    labels for the coach (all videos concatenated). Cell (c, a) is the mean of
    the two-rater alphas between a and every other annotator with data for c;
    missing (coach, annotator) combinations yield NaN.

    Returns (coaches, annotators, matrix) with rows/columns sorted by id.
    """
    coaches = sorted(labels)
    annotators = sorted({a for per_coach in labels.values() for a in per_coach})
    if len(annotators) < 2:
        raise ValidationError("mean_agreement_matrix needs >= 2 annotators")
    out = np.full((len(coaches), len(annotators)), np.nan)
    for i, coach in enumerate(coaches):
        per_coach = labels[coach]
        for j, ann in enumerate(annotators):
            if ann not in per_coach:
                continue
            pair_alphas = [
                krippendorff_alpha(np.vstack([per_coach[ann], per_coach[other]]))
                for other in annotators
                if other != ann and other in per_coach
            ]
            if pair_alphas:
                out[i, j] = float(np.mean(pair_alphas))
    return coaches, annotators, out

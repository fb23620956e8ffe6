"""humorkit: continuous humor-annotation fusion, segmentation, models, evaluation."""

__version__ = "0.1.0"

from .agreement import binary_humor, ccc, discretize, jaccard, krippendorff_alpha  # noqa: F401
from .errors import HumorkitError, NumericalError, ValidationError  # noqa: F401
from .evaluate import (  # noqa: F401
    PredictionSet,
    ResultsTable,
    late_fuse,
    loso_harness,
    platt_scale,
    roc_auc,
    z_standardize,
)
from .gold import (  # noqa: F401
    AnnotatorWeights,
    SegmentTable,
    active_frames,
    compute_weights,
    corpus_stats,
    drop_low_agreement,
    fuse,
    segment_binary,
    segment_count,
    segment_dimensions,
)
from .preprocess import (  # noqa: F401
    AnnotationSignal,
    PreprocessConfig,
    clip_outliers,
    minmax_normalize,
    preprocess_all,
    threshold_small_amplitudes,
)

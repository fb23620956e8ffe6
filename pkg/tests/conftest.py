import numpy as np
import pytest

from humorkit.preprocess import AnnotationSignal


def make_signal(values, coach="c1", video="v1", annotator="a1", dimension="sentiment"):
    return AnnotationSignal(coach, video, annotator, dimension, np.asarray(values, dtype=float))


@pytest.fixture
def signal_factory():
    return make_signal

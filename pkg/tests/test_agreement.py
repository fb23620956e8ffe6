import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from humorkit.agreement import (
    binary_humor,
    ccc,
    discretize,
    jaccard,
    krippendorff_alpha,
    mean_agreement_matrix,
)
from humorkit.errors import ValidationError

from .oracles import krippendorff_pairwise


class TestCcc:
    def test_perfect_concordance(self):
        x = np.array([0.1, 0.5, 0.9, 0.3])
        assert ccc(x, x) == 1.0

    def test_hand_example(self):
        assert ccc([1, 2, 3], [2, 4, 6]) == pytest.approx(4 / 11, abs=1e-12)

    def test_degenerate_denominator(self):
        assert ccc([2.0, 2.0], [2.0, 2.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            ccc([1, 2], [1, 2, 3])

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.standard_normal(15)
            y = rng.standard_normal(15)
            assert ccc(x, y) == pytest.approx(ccc(y, x), abs=1e-12)

    @given(
        st.floats(min_value=0.01, max_value=5.0),
        st.floats(min_value=0.1, max_value=3.0).filter(lambda b: abs(b - 1) > 1e-3),
    )
    @settings(max_examples=50, deadline=None)
    def test_shift_or_scale_breaks_perfection(self, shift, scale):
        x = np.array([0.0, 1.0, 2.0, 4.0, -1.0])
        assert ccc(x, x + shift) < 1.0
        assert ccc(x, scale * x) < 1.0
        assert ccc(x, 0.0 + 1.0 * x) == 1.0


class TestDiscretize:
    def test_sign_mapping(self):
        assert np.array_equal(discretize(np.array([0.3, -0.2, 0.0])), [1, -1, 0])

    def test_all_zero(self):
        assert np.array_equal(discretize(np.zeros(4)), np.zeros(4))

    def test_tiny_magnitudes_keep_sign(self):
        assert np.array_equal(discretize(np.array([-0.01, 0.9])), [-1, 1])


class TestBinaryHumor:
    def test_either_dimension_counts(self):
        out = binary_humor(np.array([0.0, 0.3, 0.0]), np.array([0.1, 0.0, 0.0]))
        assert np.array_equal(out, [1, 1, 0])

    def test_both_zero(self):
        assert np.array_equal(binary_humor(np.zeros(3), np.zeros(3)), [0, 0, 0])

    def test_sign_ignored(self):
        assert np.array_equal(binary_humor(np.array([-0.2]), np.array([-0.4])), [1])

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            binary_humor(np.zeros(2), np.zeros(3))


class TestKrippendorff:
    def test_identical_nonconstant_rows(self):
        m = [["a", "b", "a", "c"], ["a", "b", "a", "c"], ["a", "b", "a", "c"]]
        assert krippendorff_alpha(m) == pytest.approx(1.0, abs=1e-12)

    def test_worked_example(self):
        m = [["a", "a", "b", "b"], ["a", "a", "b", "a"]]
        assert krippendorff_alpha(m) == pytest.approx(16 / 30, abs=1e-12)

    def test_systematic_disagreement_negative(self):
        m = [["a", "b", "a", "b"], ["b", "a", "b", "a"]]
        alpha = krippendorff_alpha(m)
        assert alpha < 0
        assert alpha == pytest.approx(krippendorff_pairwise(m), abs=1e-12)

    def test_single_class_returns_one(self):
        assert krippendorff_alpha([["x", "x"], ["x", "x"]]) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            krippendorff_alpha(np.zeros((1, 4)))

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(1)
        m = rng.integers(0, 3, size=(4, 12))
        relabeled = np.array([[("x", "y", "z")[v] for v in row] for row in m])
        assert krippendorff_alpha(m) == pytest.approx(
            krippendorff_alpha(relabeled), abs=1e-12
        )

    def test_matches_pairwise_oracle_on_random_matrices(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            raters = rng.integers(2, 6)
            units = rng.integers(1, 21)
            classes = rng.integers(2, 4)
            m = rng.integers(0, classes, size=(raters, units))
            assert krippendorff_alpha(m) == pytest.approx(
                krippendorff_pairwise(m), abs=1e-9
            )


class TestJaccard:
    def test_identical_with_support(self):
        assert jaccard([1, 1, 0], [1, 1, 0]) == 1.0

    def test_hand_example(self):
        assert jaccard([1, 1, 0, 0], [0, 1, 1, 0]) == pytest.approx(1 / 3)

    def test_disjoint(self):
        assert jaccard([1, 0], [0, 1]) == 0.0

    def test_both_empty(self):
        assert jaccard([0, 0], [0, 0]) == 1.0

    @given(st.lists(st.booleans(), min_size=1, max_size=30), st.data())
    @settings(max_examples=50, deadline=None)
    def test_one_iff_equal_supports(self, a, data):
        b = data.draw(st.lists(st.booleans(), min_size=len(a), max_size=len(a)))
        a = np.array(a)
        b = np.array(b)
        if jaccard(a, b) == 1.0:
            assert np.array_equal(a != 0, b != 0)
        if np.array_equal(a, b):
            assert jaccard(a, b) == 1.0


class TestMeanAgreementMatrix:
    def test_two_identical_annotators(self):
        labels = {"c1": {"a1": np.array([1, 0, 1, 0]), "a2": np.array([1, 0, 1, 0])}}
        coaches, annotators, matrix = mean_agreement_matrix(labels)
        assert coaches == ["c1"] and annotators == ["a1", "a2"]
        assert np.allclose(matrix, 1.0)

    def test_random_annotator_scores_lowest(self):
        rng = np.random.default_rng(3)
        base = (rng.random(400) < 0.3).astype(int)
        labels = {
            "c1": {
                "a1": base,
                "a2": base.copy(),
                "a3": rng.integers(0, 2, 400),
            }
        }
        _, annotators, matrix = mean_agreement_matrix(labels)
        scores = dict(zip(annotators, matrix[0]))
        assert scores["a3"] == min(scores.values())

    def test_shape_and_missing_cells(self):
        labels = {
            "c1": {"a1": np.array([1, 0]), "a2": np.array([1, 1])},
            "c2": {"a1": np.array([0, 0, 1]), "a2": np.array([0, 1, 1]), "a3": np.array([0, 0, 1])},
        }
        coaches, annotators, matrix = mean_agreement_matrix(labels)
        assert matrix.shape == (2, 3)
        assert np.isnan(matrix[0, 2])  # a3 has no data for c1

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from envelope_learn.data import (
    DataError, LabeledDataset, ScaleParams, concat, dataset_to_csv, parse_dataset_csv, sign, sign_array,
    standardize_apply, standardize_fit, standardize_invert,
)


class TestSign:
    def test_positive(self):
        assert sign(0.5) == 1

    def test_zero_is_negative(self):
        assert sign(0.0) == -1
        assert sign(-0.0) == -1

    def test_negative(self):
        assert sign(-3.2) == -1

    @pytest.mark.parametrize("v", [math.nan, math.inf, -math.inf])
    def test_non_finite(self, v):
        with pytest.raises(DataError):
            sign(v)

    def test_array_matches_scalar(self):
        v = np.array([-1.0, 0.0, 1e-300, 2.0])
        assert sign_array(v).tolist() == [sign(x) for x in v]


class TestStandardize:
    def test_population_std(self):
        p = standardize_fit(np.array([[1.0], [2.0], [3.0]]))
        assert p.means[0] == pytest.approx(2.0)
        assert p.scales[0] == pytest.approx(math.sqrt(2 / 3), rel=1e-15)

    def test_constant_feature(self):
        p = standardize_fit(np.array([[5.0], [5.0], [5.0]]))
        assert p.means[0] == 5.0 and p.scales[0] == 1.0

    def test_two_features(self):
        p = standardize_fit(np.array([[0.0, -1.0], [2.0, 1.0]]))
        np.testing.assert_allclose(p.means, [1.0, 0.0])
        np.testing.assert_allclose(p.scales, [1.0, 1.0])

    def test_empty(self):
        with pytest.raises(DataError, match="empty dataset"):
            standardize_fit(np.empty((0, 3)))

    def test_apply(self):
        assert standardize_apply(ScaleParams([2.0], [1.0]), [2.0]).tolist() == [0.0]
        assert standardize_apply(ScaleParams([0.0], [2.0]), [4.0]).tolist() == [2.0]

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            standardize_apply(ScaleParams([0.0], [1.0]), [1.0, 2.0])

    def test_scales_must_be_positive(self):
        with pytest.raises(DataError):
            ScaleParams([0.0], [0.0])

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 5)),
                  elements=st.floats(-1e6, 1e6, allow_nan=False)))
    def test_fit_then_apply_is_standard(self, X):
        p = standardize_fit(X)
        Z = standardize_apply(p, X)
        assert np.all(np.abs(Z.mean(axis=0)) < 1e-10 * np.maximum(1, np.abs(X).max() / p.scales))
        for j in range(X.shape[1]):
            if np.ptp(X[:, j]) > 1e-10:  # guarantees population std > 1e-12 for N <= 30
                assert abs(Z[:, j].std() - 1) < 1e-10

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 4)),
                  elements=st.floats(-1e3, 1e3, allow_nan=False)))
    def test_round_trip(self, X):
        p = standardize_fit(X)
        back = standardize_invert(p, standardize_apply(p, X))
        np.testing.assert_allclose(back, X, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(X).max()))


class TestDataset:
    def test_counts(self):
        d = LabeledDataset([[0.0], [1.0], [2.0]], [1, -1, 1])
        assert (d.N, d.n, d.n_pos, d.n_neg, d.ratio) == (3, 1, 2, 1, 2.0)

    @pytest.mark.parametrize("bad", [[0, 1], [2, -1], [1.5, 1]])
    def test_rejects_bad_labels(self, bad):
        with pytest.raises(DataError):
            LabeledDataset([[0.0], [1.0]], bad)

    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            LabeledDataset([[math.nan]], [1])

    def test_row_mismatch(self):
        with pytest.raises(DataError):
            LabeledDataset([[0.0], [1.0]], [1])

    def test_immutable(self):
        d = LabeledDataset([[0.0]], [1])
        with pytest.raises(ValueError):
            d.X[0, 0] = 1.0

    def test_ratio_without_minority(self):
        with pytest.raises(DataError):
            LabeledDataset([[0.0]], [1]).ratio

    def test_concat(self):
        a = LabeledDataset([[0.0]], [1], ("a",))
        b = LabeledDataset([[1.0]], [-1], ("a",))
        c = concat([a, b])
        assert c.X.ravel().tolist() == [0.0, 1.0] and c.y.tolist() == [1, -1]


class TestCsv:
    def test_round_trip_exact(self, rng):
        X = rng.normal(size=(7, 3)) * 1e3
        d = LabeledDataset(X, [1, -1, 1, 1, -1, 1, 1], ("a", "b", "c"), cycles=np.arange(7) + 10)
        text = dataset_to_csv(d)
        back = parse_dataset_csv(text.splitlines())
        assert np.array_equal(back.X, d.X) and np.array_equal(back.y, d.y)
        assert back.feature_names == d.feature_names and back.cycles.tolist() == d.cycles.tolist()
        assert dataset_to_csv(back) == text

    def test_header(self):
        text = dataset_to_csv(LabeledDataset([[1.0, 2.0]], [-1], ("u", "v")))
        assert text == "u,v,label\n1.0,2.0,-1\n"

    def test_missing_label(self):
        with pytest.raises(DataError, match="label"):
            parse_dataset_csv(["a,b", "1,2"])

    def test_ragged_row(self):
        with pytest.raises(DataError, match="line 3"):
            parse_dataset_csv(["a,label", "1,1", "1,2,1"])

    def test_bad_number(self):
        with pytest.raises(DataError):
            parse_dataset_csv(["a,label", "x,1"])

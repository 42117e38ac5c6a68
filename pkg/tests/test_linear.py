import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from envelope_learn.data import DataError, LabeledDataset, ScaleParams, standardize_apply, standardize_fit
from envelope_learn.linear import (
    LinearModel, SingularSystemError, logistic_loss_and_gradient, predict_linear, train_linear_ls, train_logistic,
)

from conftest import random_dataset
from oracles import ridge_normal_equations

PAIR = LabeledDataset([[-1.0], [1.0]], [-1, 1])


def fd_gradient(f, theta, h=1e-6):
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


class TestLogisticLoss:
    def test_zero_parameters(self, rng):
        d = random_dataset(rng, 9, 3)
        loss, _ = logistic_loss_and_gradient(np.zeros(4), d.X, d.y)
        assert loss == pytest.approx(9 * math.log(2), rel=1e-15)

    def test_single_sample(self):
        loss, _ = logistic_loss_and_gradient([10.0, 0.0], [[1.0]], [1])
        assert loss == pytest.approx(math.log1p(math.exp(-10)), rel=1e-12)
        assert loss == pytest.approx(4.54e-5, rel=1e-3)

    def test_extreme_margins_finite(self):
        loss, grad = logistic_loss_and_gradient([700.0, 0.0], [[1.0], [-1.0]], [-1, 1])
        assert loss == pytest.approx(1400.0)
        assert np.all(np.isfinite(grad))

    def test_finite_difference(self, rng):
        d = random_dataset(rng, 5, 3)
        w = rng.uniform(0.5, 2, 5)
        theta = rng.normal(size=4)
        f = lambda t: logistic_loss_and_gradient(t, d.X, d.y, w)[0]
        _, g = logistic_loss_and_gradient(theta, d.X, d.y, w)
        fd = fd_gradient(f, theta)
        assert np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1e-8)) < 1e-5

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            logistic_loss_and_gradient(np.zeros(3), [[1.0]], [1])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_convex_midpoint(self, seed):
        r = np.random.default_rng(seed)
        d = random_dataset(r, 6, 2)
        a, b = r.normal(scale=3, size=3), r.normal(scale=3, size=3)
        f = lambda t: logistic_loss_and_gradient(t, d.X, d.y)[0]
        assert f((a + b) / 2) <= (f(a) + f(b)) / 2 + 1e-9


class TestTrainLogistic:
    def test_symmetric_pair(self):
        m = train_logistic(PAIR, l2=0.1)
        assert m.predict(PAIR.X).tolist() == [-1, 1]
        assert abs(m.beta0) < 1e-8
        assert m.converged

    def test_separable_divergence(self):
        short = train_logistic(PAIR, l2=0.0, max_iters=100)
        long = train_logistic(PAIR, l2=0.0, max_iters=1000)
        assert not long.converged and long.iterations == 1000
        assert long.beta1[0] > short.beta1[0] > 0
        assert long.predict(PAIR.X).tolist() == [-1, 1]

    def test_gaussian_pair_near_bayes(self):
        r = np.random.default_rng(2024)
        y = np.repeat([1, -1], 100)
        X = r.normal(size=(200, 2)) + np.where(y[:, None] == 1, 1.0, -1.0)
        d = LabeledDataset(X, y)
        m = train_logistic(d)
        acc = np.mean(m.predict(X) == y)
        bayes = np.mean(np.where(X.sum(1) > 0, 1, -1) == y)  # equal covariances: boundary x1 + x2 = 0
        assert abs(acc - bayes) <= 0.05

    def test_degenerate_labels(self):
        with pytest.raises(DataError, match="degenerate labels"):
            train_logistic(LabeledDataset([[0.0], [1.0]], [1, 1]))

    def test_unit_weights_equal_unweighted(self, rng):
        d = random_dataset(rng, 30, 3)
        a = train_logistic(d, max_iters=500)
        b = train_logistic(d, np.ones(30), max_iters=500)
        np.testing.assert_allclose(np.append(a.beta1, a.beta0), np.append(b.beta1, b.beta0), atol=1e-10)

    def test_optimality(self, rng):
        d = random_dataset(rng, 40, 3)
        m = train_logistic(d, l2=0.5)
        Z = standardize_apply(m.scale, d.X)
        _, g = logistic_loss_and_gradient(np.append(m.beta1, m.beta0), Z, d.y, l2=0.5)
        assert np.linalg.norm(g) <= 1e-8


class TestLeastSquares:
    def test_two_point_interpolation(self):
        d = LabeledDataset([[0.0], [2.0]], [-1, 1])
        m = train_linear_ls(d, lam=0.0, scale=ScaleParams.identity(1))
        assert m.beta1[0] == pytest.approx(1.0, abs=1e-12)
        assert m.beta0 == pytest.approx(-1.0, abs=1e-12)

    def test_two_point_interpolation_standardized(self):
        d = LabeledDataset([[0.0], [2.0]], [-1, 1])
        m = train_linear_ls(d, lam=0.0)
        np.testing.assert_allclose(m.decision_function(d.X), [-1, 1], atol=1e-12)

    def test_huge_ridge(self, rng):
        # minority-dominated data so the shrunk bias is negative
        X = rng.normal(size=(20, 2))
        y = np.array([-1] * 14 + [1] * 6)
        m = train_linear_ls(LabeledDataset(X, y), lam=1e9)
        assert np.linalg.norm(np.append(m.beta1, m.beta0)) < 1e-6
        assert set(m.predict(X).tolist()) == {-1}

    def test_normal_equations_oracle(self, rng):
        d = random_dataset(rng, 6, 3)
        m = train_linear_ls(d, lam=0.5)
        A = np.hstack([standardize_apply(m.scale, d.X), np.ones((6, 1))])
        ref = ridge_normal_equations(A, d.y.astype(float), np.ones(6), 0.5)
        assert np.max(np.abs(np.append(m.beta1, m.beta0) - ref)) < 1e-8

    def test_weighted_oracle(self, rng):
        d = random_dataset(rng, 12, 4)
        w = rng.uniform(0.1, 5, 12)
        m = train_linear_ls(d, w, lam=0.3)
        A = np.hstack([standardize_apply(m.scale, d.X), np.ones((12, 1))])
        ref = ridge_normal_equations(A, d.y.astype(float), w, 0.3)
        assert np.max(np.abs(np.append(m.beta1, m.beta0) - ref)) < 1e-10

    def test_singular(self):
        d = LabeledDataset([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]], [1, -1, 1])
        with pytest.raises(SingularSystemError, match="singular system"):
            train_linear_ls(d, lam=0.0, scale=ScaleParams.identity(2))

    @pytest.mark.parametrize("seed", range(5))
    def test_positive_ridge_always_solves(self, seed):
        d = LabeledDataset(np.ones((4, 3)), [1, -1, 1, -1])  # rank-1 design
        m = train_linear_ls(d, lam=1e-3 * (seed + 1))
        assert np.all(np.isfinite(m.beta1))

    @pytest.mark.parametrize("m_dup", [2, 3, 7])
    def test_duplication_equals_weighting(self, rng, m_dup):
        d = random_dataset(rng, 25, 3)
        scale = standardize_fit(d)
        minority = np.flatnonzero(d.y == -1)
        dup = d.subset(np.concatenate([np.arange(d.N)] + [minority] * (m_dup - 1)))
        a = train_linear_ls(dup, lam=0.1, scale=scale)
        b = train_linear_ls(d, np.where(d.y == -1, float(m_dup), 1.0), lam=0.1, scale=scale)
        assert np.max(np.abs(np.append(a.beta1, a.beta0) - np.append(b.beta1, b.beta0))) < 1e-9

    def test_n_p(self):
        m = LinearModel(np.zeros(39), 0.0, ScaleParams.identity(39))
        assert m.n_p == 40


class TestPredict:
    def test_positive(self):
        m = LinearModel([1.0], 0.0, ScaleParams.identity(1))
        assert predict_linear(m, [2.0]) == 1

    def test_zero_margin(self):
        m = LinearModel([1.0], 0.0, ScaleParams.identity(1))
        assert predict_linear(m, [0.0]) == -1

    def test_bias_only(self):
        m = LinearModel([1.0, -1.0], 0.5, ScaleParams.identity(2))
        assert predict_linear(m, [0.0, 0.0]) == 1

    def test_applies_scale(self):
        m = LinearModel([1.0], 0.0, ScaleParams([10.0], [2.0]))
        assert predict_linear(m, [9.0]) == -1 and predict_linear(m, [11.0]) == 1

    def test_dimension_mismatch(self):
        m = LinearModel([1.0], 0.0, ScaleParams.identity(1))
        with pytest.raises(DataError):
            predict_linear(m, [1.0, 2.0])

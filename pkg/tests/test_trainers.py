import numpy as np
import pytest

from envelope_learn.data import DataError
from envelope_learn.elm import class_weights, elm_train, init_hidden_layer
from envelope_learn.linear import train_linear_ls
from envelope_learn.resampling import oversample
from envelope_learn.svm import SvmConfig, svm_train
from envelope_learn.trainers import DEFAULTS, Trainer

from conftest import random_dataset


@pytest.fixture
def data(rng):
    d = random_dataset(rng, 60, 3)
    return d.subset(np.flatnonzero((d.y == 1) | (np.arange(60) % 3 == 0)))


def test_resolve_defaults():
    assert Trainer("elm").resolve() == DEFAULTS["elm"]
    assert Trainer("ls", "cost").resolve()["f"] == 1.0


def test_resolve_precedence():
    t = Trainer("elm", fixed=(("n_h", 20), ("lambda", 5.0)))
    assert t.resolve({"lambda": 2.0}) == {"n_h": 20, "lambda": 2.0, "seed": 0}
    assert isinstance(t.resolve({"n_h": 30.0})["n_h"], int)


@pytest.mark.parametrize("params", [{"f": 1.0}, {"gamma": 1.0}])
def test_unknown_parameter(params):
    with pytest.raises(DataError):
        Trainer("svm").resolve(params)


@pytest.mark.parametrize("kw", [dict(family="tree"), dict(family="ls", mode="smote")])
def test_bad_trainer(kw):
    with pytest.raises(DataError):
        Trainer(**kw)


def test_cost_ls_matches_direct(data):
    m = Trainer("ls", "cost").fit(data, {"lambda": 0.5, "f": 0.7})
    ref = train_linear_ls(data, class_weights(data.y, 0.7).gamma, 0.5)
    assert np.array_equal(m.beta1, ref.beta1)


def test_cost_elm_matches_direct(data):
    m = Trainer("elm", "cost").fit(data, {"n_h": 9, "lambda": 0.1, "f": 2.0, "seed": 4})
    ref = elm_train(data, init_hidden_layer(3, 9, 4), 0.1, class_weights(data.y, 2.0))
    assert np.array_equal(m.W, ref.W)


def test_cost_svm_widens_minority_box(data):
    m = Trainer("svm", "cost").fit(data, {"C": 1.0, "sigma": 0.5, "f": 0.5})
    ref = svm_train(data, SvmConfig(C=1.0, sigma=0.5, minority_factor=data.ratio * 0.5))
    assert np.array_equal(m.coefficients, ref.coefficients)


def test_over_uses_resampled_data(data):
    m = Trainer("ls", "over", resample_seed=3).fit(data, {"lambda": 0.2})
    ref = train_linear_ls(oversample(data, 3), lam=0.2)
    assert np.array_equal(m.beta1, ref.beta1)

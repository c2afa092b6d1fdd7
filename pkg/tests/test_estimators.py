import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.linear_model import LinearRegression
from sklearn.pipeline import Pipeline

from bitscreen import BITSScreener, FRScreener, HOLPScreener, SISScreener
from bitscreen.exceptions import ConfigError

from conftest import gaussian_instance

ALL = [BITSScreener, SISScreener, HOLPScreener, FRScreener]


@pytest.fixture
def data():
    Z, y = gaussian_instance(0, n=60, p=150, k=3, noise=0.3)
    return Z, y


@pytest.mark.parametrize("cls", ALL)
def test_fit_transform_and_support(cls, data):
    Z, y = data
    sel = cls(size=5).fit(Z, y)
    assert sel.get_support().sum() == 5
    assert sel.transform(Z).shape == (60, 5)
    np.testing.assert_array_equal(sel.get_support(indices=True), np.sort(sel.selected_))
    assert sel.n_features_in_ == 150


@pytest.mark.parametrize("cls", ALL)
def test_clone_and_params(cls):
    est = cls(size=7)
    params = est.get_params()
    assert params["size"] == 7
    twin = clone(est)
    assert twin.get_params() == params and twin is not est


def test_bits_attributes(data):
    Z, y = data
    sel = BITSScreener(lam=2.0, stop="pp").fit(Z, y)
    assert sel.lambda_ == 2.0
    assert sel.stop_reason_ in ("pp-drop", "max-steps", "exhausted", "perfect-fit")
    assert len(sel.pi_trace_) == len(sel.path_)
    np.testing.assert_array_equal(sel.selected_, sel.path_[: len(sel.selected_)])
    assert BITSScreener(lam="n/p").fit(Z, y).lambda_ == pytest.approx(60 / 150)


def test_pipeline(data):
    Z, y = data
    pipe = Pipeline([("screen", BITSScreener(stop="ebic")), ("ols", LinearRegression())]).fit(Z, y)
    assert pipe.score(Z, y) > 0.9


def test_set_params_changes_behavior(data):
    Z, y = data
    sel = SISScreener().set_params(size=3).fit(Z, y)
    assert sel.get_support().sum() == 3


def test_sparse_input(data):
    Z, y = data
    Zs = sp.csc_matrix(np.where(np.abs(Z) > 1.0, Z, 0.0))
    a = BITSScreener(size=4).fit(Zs, y)
    b = BITSScreener(size=4).fit(Zs.toarray(), y)
    np.testing.assert_array_equal(a.path_, b.path_)


def test_validation_errors(data):
    Z, y = data
    with pytest.raises(ValueError):
        BITSScreener().fit(Z, y[:-1])
    Zn = Z.copy()
    Zn[0, 0] = np.nan
    with pytest.raises(ValueError):
        SISScreener().fit(Zn, y)
    with pytest.raises(ConfigError):
        SISScreener(stop="pp").fit(Z, y)
    with pytest.raises(ConfigError):
        BITSScreener(stop="aic").fit(Z, y)


def test_holp_coef(data):
    Z, y = data
    sel = HOLPScreener(stop="ebic").fit(Z, y)
    assert sel.coef_.shape == (150,)
    assert 1 <= sel.get_support().sum() <= 60


def test_unfitted_transform_raises(data):
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        FRScreener().transform(data[0])

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import cross_val_score

from nuisblue import illustrative
from nuisblue.regressors import DifferentialBLUE, JointBLUE, OSPBLUE, split_design

from conftest import make_model, relerr


def design(rng, N=12, L=2, M=2):
    m, x, u = make_model(rng, N, L, M)
    return m.design, m.y, x, u


def test_split_design():
    X = np.arange(12.0).reshape(3, 4)
    H, G = split_design(X, 1)
    assert H.shape == (3, 3) and G.shape == (3, 1)
    with pytest.raises(ValueError):
        split_design(X, 4)


def test_every_wrapper_gives_the_same_coefficients(rng):
    X, y, _, _ = design(rng)
    ref = JointBLUE(n_nuisance=2).fit(X, y).coef_
    for est in (
        OSPBLUE(n_nuisance=2),
        OSPBLUE(n_nuisance=2, kind="projector"),
        DifferentialBLUE(n_nuisance=2),
        DifferentialBLUE(n_nuisance=2, reference=[3, 0]),
        DifferentialBLUE(n_nuisance=2, order=[1, 0]),
    ):
        assert relerr(est.fit(X, y).coef_, ref) < 1e-8


def test_illustrative_case_through_the_wrapper():
    X = np.hstack([illustrative.H, illustrative.G])
    y = np.array([1.0, 2.0, 3.0])
    est = DifferentialBLUE(n_nuisance=2, reference=list(illustrative.REFERENCES)).fit(X, y)
    np.testing.assert_allclose(est.plan_.total, [[0.1, -0.0625, 0.00625]], atol=1e-12)
    np.testing.assert_allclose(est.coef_, [-3.2 + 4 - 0.6], atol=1e-9)


def test_joint_exposes_nuisance_and_full_prediction(rng):
    X, y, x, u = design(rng)
    est = JointBLUE(n_nuisance=2).fit(X, y)
    assert est.nuisance_.shape == (2,)
    assert est.method_ == "JLS"
    full = est.predict(X, include_nuisance=True)
    np.testing.assert_allclose(np.linalg.norm(y - full), est.residual_norm_, rtol=1e-10)
    np.testing.assert_allclose(est.predict(X), X[:, :2] @ est.coef_)


def test_params_and_clone():
    est = DifferentialBLUE(n_nuisance=3, reference="first_nonzero", whiten=False)
    params = est.get_params()
    assert params == {"n_nuisance": 3, "reference": "first_nonzero", "whiten": False, "order": None}
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(whiten=True)
    assert est.whiten is True


def test_unfitted_and_bad_kind(rng):
    X, y, _, _ = design(rng)
    with pytest.raises(NotFittedError):
        OSPBLUE().predict(X)
    with pytest.raises(ValueError):
        OSPBLUE(n_nuisance=2, kind="other").fit(X, y)
    est = JointBLUE(n_nuisance=2).fit(X, y)
    with pytest.raises(ValueError):
        est.predict(X[:, :3])


def test_unwhitened_wrapper_differs(rng):
    X, y, _, _ = design(rng, N=10, L=1, M=2)
    a = DifferentialBLUE(n_nuisance=2, whiten=False, reference=[0, 0]).fit(X, y)
    b = DifferentialBLUE(n_nuisance=2).fit(X, y)
    assert a.method_ == "DIFF_UNWHITENED" and b.method_ == "DIFF"
    assert relerr(a.coef_, b.coef_) > 1e-8


def test_works_inside_model_selection(rng):
    X, y, _, _ = design(rng, N=40, L=2, M=1)
    scores = cross_val_score(OSPBLUE(n_nuisance=1), X, y, cv=4, scoring="neg_mean_squared_error")
    assert scores.shape == (4,) and np.all(np.isfinite(scores))

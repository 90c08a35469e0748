import numpy as np
import pytest

from nuisblue import illustrative
from nuisblue.estimators import (
    blue_covariance,
    joint_ls,
    joint_ls_blockwise,
    joint_ls_weights,
    osp_artifacts,
    osp_estimate_type1,
    osp_estimate_type2,
)
from nuisblue.exceptions import RankViolation
from nuisblue.linmodel import LinearNuisanceModel

from conftest import gauss_solve, make_model, relerr

PROJECTOR_4DP = np.array(
    [
        [0.7171, -0.4482, 0.0448],
        [-0.4482, 0.2801, -0.0280],
        [0.0448, -0.0280, 0.0028],
    ]
)
JLS_WEIGHTS = np.array([[-3.2, 2.0, -0.2], [2.0, -1.0, 0.0], [2.3, -1.5, 0.3]])


def test_projector_on_illustrative_g():
    art = osp_artifacts(illustrative.G)
    np.testing.assert_allclose(art.projector, PROJECTOR_4DP, atol=5e-5)
    np.testing.assert_allclose(art.basis @ art.basis.T, art.projector, atol=1e-9)


def test_projector_of_ones_is_centering():
    for N in (2, 5, 11):
        P = osp_artifacts(np.ones((N, 1))).projector
        np.testing.assert_allclose(P, np.eye(N) - np.ones((N, N)) / N, atol=1e-14)


def test_projector_is_idempotent_and_kills_g(rng):
    for _ in range(25):
        N = int(rng.integers(4, 12))
        G = rng.standard_normal((N, int(rng.integers(1, min(4, N - 1) + 1))))
        P = osp_artifacts(G).projector
        np.testing.assert_allclose(P @ P, P, atol=1e-10)
        np.testing.assert_allclose(P, P.T, atol=1e-15)
        np.testing.assert_allclose(P @ G, 0.0, atol=1e-10)


def test_joint_weights_on_illustrative_case():
    W = joint_ls_weights(illustrative.H, illustrative.G)
    np.testing.assert_allclose(W, JLS_WEIGHTS, atol=1e-9)


def test_all_estimators_on_illustrative_case(rng):
    for _ in range(5):
        y = rng.standard_normal(3)
        m = illustrative.model(y)
        want = JLS_WEIGHTS[0] @ y
        for est in (joint_ls, osp_estimate_type1, osp_estimate_type2):
            np.testing.assert_allclose(est(m).x_hat, [want], atol=1e-9)


def test_zero_noise_recovers_truth(rng):
    for _ in range(20):
        m, x, u = make_model(rng, int(rng.integers(6, 12)), 2, 3, noise=0.0)
        rep = joint_ls(m)
        np.testing.assert_allclose(rep.x_hat, x, atol=1e-10)
        np.testing.assert_allclose(rep.u_hat, u, atol=1e-10)
        assert rep.residual_norm < 1e-10
        np.testing.assert_allclose(osp_estimate_type1(m).x_hat, x, atol=1e-10)
        np.testing.assert_allclose(osp_estimate_type2(m).x_hat, x, atol=1e-10)


def test_joint_ls_matches_normal_equation_oracle(rng):
    for _ in range(30):
        m, _, _ = make_model(rng, 10, 3, 2, noise=0.5)
        A = m.design
        theta = gauss_solve(A.T @ A, A.T @ m.y)
        rep = joint_ls(m)
        np.testing.assert_allclose(np.concatenate([rep.x_hat, rep.u_hat]), theta, atol=1e-9)
        x_b, u_b = joint_ls_blockwise(m)
        np.testing.assert_allclose(x_b, theta[:3], atol=1e-9)
        np.testing.assert_allclose(u_b, theta[3:], atol=1e-9)


def test_osp_types_agree_with_joint(rng):
    for _ in range(200):
        N = int(rng.integers(4, 13))
        L = int(rng.integers(1, 5))
        M = int(rng.integers(1, 5))
        if N < L + M + 1:
            continue
        m, _, _ = make_model(rng, N, L, M)
        ref = joint_ls(m).x_hat
        art = osp_artifacts(m.G)
        t1 = osp_estimate_type1(m, art)
        t2 = osp_estimate_type2(m, art)
        assert t1.method == "OSP1" and t2.method == "OSP2"
        assert relerr(t1.x_hat, ref) < 1e-8
        assert relerr(t2.x_hat, t1.x_hat) < 1e-8


def test_projected_rank_loss_is_reported():
    H = np.array([[1.0], [1.0], [1.0], [1.0]])
    G = np.ones((4, 1))
    m = LinearNuisanceModel(np.arange(4.0), H, G)
    with pytest.raises(RankViolation):
        osp_estimate_type1(m)
    with pytest.raises(RankViolation):
        joint_ls(m)


def test_blue_covariance_without_nuisance(rng):
    H = rng.standard_normal((7, 2))
    m = LinearNuisanceModel(np.zeros(7), H, np.zeros((7, 0)), sigma=0.3)
    np.testing.assert_allclose(blue_covariance(m), 0.09 * np.linalg.inv(H.T @ H), rtol=1e-12)


def test_blue_covariance_scales_with_sigma_squared(rng):
    m, _, _ = make_model(rng, 9, 2, 2)
    a = blue_covariance(LinearNuisanceModel(m.y, m.H, m.G, 1.0))
    b = blue_covariance(LinearNuisanceModel(m.y, m.H, m.G, 2.0))
    np.testing.assert_allclose(b, 4 * a, rtol=1e-14)


def test_blue_covariance_matches_monte_carlo():
    m = illustrative.model()
    H, G = m.H, m.G
    P = osp_artifacts(G).projector
    analytic = blue_covariance(m)
    np.testing.assert_allclose(analytic, 1.0 / (H.T @ P @ H), rtol=1e-12)
    draws = np.random.default_rng(5).standard_normal((100_000, 3))
    x_hat = draws @ JLS_WEIGHTS[0]
    assert abs(x_hat.var() / analytic[0, 0] - 1) < 0.05


def test_joint_ls_is_unbiased(rng):
    m, x, u = make_model(rng, 8, 2, 2, noise=0.0)
    W = joint_ls_weights(m.H, m.G)
    noise = rng.standard_normal((20_000, 8))
    est = (m.y + noise) @ W[:2].T
    np.testing.assert_allclose(est.mean(axis=0), x, atol=0.05)

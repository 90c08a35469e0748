"""Joint least squares and orthogonal-subspace-projection estimators.

All three routes return the same estimate of ``x`` for a valid model; the
joint route is the only one that also yields the nuisance vector.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import RankDeficient, RankViolation
from .linmodel import EstimateReport, validate
from .matkernel import as_matrix, lstsq_qr, null_space_basis, pinv


@dataclass(frozen=True, eq=False)
class OspArtifacts:
    projector: np.ndarray
    basis: np.ndarray


def osp_artifacts(G):
    """Orthogonal complement projector ``I - G G^+`` and an orthonormal basis
    of the same subspace. An empty ``G`` gives the identity for both."""
    G = np.asarray(G, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    N = G.shape[0]
    if G.shape[1] == 0:
        return OspArtifacts(np.eye(N), np.eye(N))
    G = as_matrix(G, "G")
    P = np.eye(N) - G @ pinv(G)
    P = 0.5 * (P + P.T)
    return OspArtifacts(P, null_space_basis(G))


def _solve(A, b):
    try:
        return lstsq_qr(A, b)
    except RankDeficient as exc:
        raise RankViolation(str(exc)) from exc


def joint_ls_weights(H, G):
    """The (L+M) x N matrix mapping ``y`` to the stacked joint estimate."""
    A = np.hstack([as_matrix(H, "H"), np.asarray(G, dtype=float).reshape(len(H), -1)])
    try:
        return pinv(A)
    except RankDeficient as exc:
        raise RankViolation(str(exc)) from exc


def joint_ls(model):
    validate(model)
    theta = _solve(model.design, model.y)
    resid = model.y - model.design @ theta
    L = model.L
    return EstimateReport(
        x_hat=theta[:L],
        u_hat=theta[L:],
        method="JLS",
        residual_norm=float(np.linalg.norm(resid)),
    )


def joint_ls_blockwise(model):
    """Joint estimate through the block-inverse form.

    Uses ``x = M_G H^T P_G y`` and ``u = M_H G^T P_H y`` with
    ``M_G = (H^T P_G H)^{-1}``. Kept as an independent check of
    :func:`joint_ls`; it forms explicit inverses and is less stable.
    """
    validate(model)
    H, G, y = model.H, model.G, model.y
    PG = osp_artifacts(G).projector
    PH = osp_artifacts(H).projector
    x = np.linalg.solve(H.T @ PG @ H, H.T @ PG @ y)
    if model.M == 0:
        return x, np.zeros(0)
    u = np.linalg.solve(G.T @ PH @ G, G.T @ PH @ y)
    return x, u


def _report(model, A, b, method):
    x = _solve(A, b)
    return EstimateReport(
        x_hat=x, method=method, residual_norm=float(np.linalg.norm(b - A @ x))
    )


def osp_estimate_type1(model, artifacts=None):
    """LS on the projected model ``P y = P H x``."""
    validate(model)
    P = (artifacts or osp_artifacts(model.G)).projector
    return _report(model, P @ model.H, P @ model.y, "OSP1")


def osp_estimate_type2(model, artifacts=None):
    """LS on the reduced model ``U_n^T y = U_n^T H x``, whose noise stays white."""
    validate(model)
    U = (artifacts or osp_artifacts(model.G)).basis
    return _report(model, U.T @ model.H, U.T @ model.y, "OSP2")


def blue_covariance(model):
    """Covariance ``sigma^2 (H^T P_G H)^{-1}`` of the estimate of ``x``."""
    validate(model)
    U = osp_artifacts(model.G).basis
    A = U.T @ model.H
    _, R = np.linalg.qr(A, mode="reduced")
    try:
        Rinv = np.linalg.inv(R)
    except np.linalg.LinAlgError as exc:
        raise RankViolation("reduced design is singular") from exc
    cov = model.sigma**2 * (Rinv @ Rinv.T)
    return 0.5 * (cov + cov.T)

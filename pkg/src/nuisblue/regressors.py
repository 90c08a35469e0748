"""scikit-learn compatible wrappers around the nuisance-aware estimators.

The design matrix passed to ``fit`` is ``X = [H | G]``: the last
``n_nuisance`` columns are the nuisance design, the rest describe the
parameters of interest. ``coef_`` holds the estimate of ``x``.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .differencing import (
    ReferencePolicy,
    build_plan,
    differential_estimate,
    differential_estimate_unwhitened,
)
from .estimators import joint_ls, osp_artifacts, osp_estimate_type1, osp_estimate_type2
from .linmodel import LinearNuisanceModel


def split_design(X, n_nuisance):
    """Split ``X`` into the interest block ``H`` and the nuisance block ``G``."""
    X = np.asarray(X, dtype=float)
    n_nuisance = int(n_nuisance)
    if not 0 <= n_nuisance < X.shape[1]:
        raise ValueError(
            f"n_nuisance={n_nuisance} must leave at least one column of X ({X.shape[1]})"
        )
    L = X.shape[1] - n_nuisance
    return X[:, :L], X[:, L:]


class _NuisanceRegressor(RegressorMixin, BaseEstimator):
    def _model(self, X, y):
        X, y = validate_data(self, X, y, reset=True, y_numeric=True)
        H, G = split_design(X, self.n_nuisance)
        return LinearNuisanceModel(y, H, G)

    def _store(self, report):
        self.coef_ = report.x_hat
        self.residual_norm_ = report.residual_norm
        self.method_ = report.method
        return self

    def predict(self, X):
        """Contribution ``H @ coef_`` of the parameters of interest.

        The nuisance part is not included (only :class:`JointBLUE` estimates
        it; see ``nuisance_``).
        """
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        H, _ = split_design(X, self.n_nuisance)
        return H @ self.coef_


class JointBLUE(_NuisanceRegressor):
    """Jointly estimate interest and nuisance parameters by least squares."""

    def __init__(self, n_nuisance=1):
        self.n_nuisance = n_nuisance

    def fit(self, X, y):
        report = joint_ls(self._model(X, y))
        self.nuisance_ = report.u_hat
        return self._store(report)

    def predict(self, X, include_nuisance=False):
        yhat = super().predict(X)
        if include_nuisance:
            _, G = split_design(np.asarray(X, dtype=float), self.n_nuisance)
            yhat = yhat + G @ self.nuisance_
        return yhat


class OSPBLUE(_NuisanceRegressor):
    """Project out the nuisance subspace before least squares.

    ``kind="projector"`` applies ``I - G G^+``; ``kind="basis"`` reduces with
    an orthonormal basis of the same subspace (noise stays white).
    """

    def __init__(self, n_nuisance=1, kind="basis"):
        self.n_nuisance = n_nuisance
        self.kind = kind

    def fit(self, X, y):
        model = self._model(X, y)
        art = osp_artifacts(model.G)
        if self.kind == "projector":
            report = osp_estimate_type1(model, art)
        elif self.kind == "basis":
            report = osp_estimate_type2(model, art)
        else:
            raise ValueError(f"kind must be 'projector' or 'basis', got {self.kind!r}")
        self.projector_ = art.projector
        return self._store(report)


class DifferentialBLUE(_NuisanceRegressor):
    """Difference the nuisance parameters away one at a time, then whiten.

    Parameters
    ----------
    n_nuisance : int
        Number of trailing nuisance columns in ``X``.
    reference : {"largest_magnitude", "first_nonzero"} or sequence of int
        Reference row selection per step; a sequence fixes the row index
        (0-based, into the already reduced vector) at every step.
    whiten : bool, default=True
        With ``False`` the correlated differenced noise is ignored and the
        result is an ordinary (non-best) least-squares estimate.
    order : sequence of int, optional
        Elimination order of the nuisance columns.
    """

    def __init__(self, n_nuisance=1, reference="largest_magnitude", whiten=True, order=None):
        self.n_nuisance = n_nuisance
        self.reference = reference
        self.whiten = whiten
        self.order = order

    def _policy(self):
        if isinstance(self.reference, str):
            return ReferencePolicy(self.reference)
        return ReferencePolicy.fixed(self.reference)

    def fit(self, X, y):
        model = self._model(X, y)
        plan = build_plan(model, self._policy(), self.order)
        if self.whiten:
            report = differential_estimate(model, plan)
        else:
            report = differential_estimate_unwhitened(model, plan)
        self.plan_ = plan
        return self._store(report)

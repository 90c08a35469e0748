"""Best linear unbiased estimation with deterministic linear nuisance parameters.

Joint least squares, orthogonal-subspace projection and reference-based
differencing (with proper whitening) all give the same estimate; this package
implements each route, the localization models they apply to, and a Monte
Carlo harness comparing them.
"""

from .differencing import (
    DifferencingPlan,
    ReferencePolicy,
    average_ref_operator,
    build_plan,
    differential_estimate,
    differential_estimate_unwhitened,
    single_ref_operator,
)
from .estimators import (
    blue_covariance,
    joint_ls,
    osp_artifacts,
    osp_estimate_type1,
    osp_estimate_type2,
)
from .linmodel import EstimateReport, LinearNuisanceModel, validate, whiten
from .regressors import DifferentialBLUE, JointBLUE, OSPBLUE

__version__ = "0.1.0"

__all__ = [
    "DifferencingPlan",
    "DifferentialBLUE",
    "EstimateReport",
    "JointBLUE",
    "LinearNuisanceModel",
    "OSPBLUE",
    "ReferencePolicy",
    "average_ref_operator",
    "blue_covariance",
    "build_plan",
    "differential_estimate",
    "differential_estimate_unwhitened",
    "joint_ls",
    "osp_artifacts",
    "osp_estimate_type1",
    "osp_estimate_type2",
    "single_ref_operator",
    "validate",
    "whiten",
]

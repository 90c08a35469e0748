"""Three-sample, two-nuisance worked example with its reference values."""

import numpy as np

from .differencing import ReferencePolicy, build_plan
from .estimators import joint_ls_weights, osp_artifacts
from .linmodel import LinearNuisanceModel

H = np.array([[3.0], [6.0], [7.0]])
G = np.array([[3.0, 2.0], [5.0, 4.0], [2.0, 8.0]])
# reference rows (0-based) for the two elimination steps
REFERENCES = (2, 0)

JLS_WEIGHTS = np.array([[-3.2, 2.0, -0.2], [2.0, -1.0, 0.0], [2.3, -1.5, 0.3]])
PROJECTOR = np.array(
    [
        [0.7171, -0.4482, 0.0448],
        [-0.4482, 0.2801, -0.0280],
        [0.0448, -0.0280, 0.0028],
    ]
)
NULL_BASIS = np.array([-0.8468, 0.5293, -0.0529])
STEP1 = np.array([[1 / 3, 0.0, -1 / 2], [0.0, 1 / 5, -1 / 2]])
STEP1_G = np.array([[0.0, -10 / 3], [0.0, -16 / 5]])
STEP2 = np.array([[3 / 10, -5 / 16]])
TOTAL = np.array([[1 / 10, -1 / 16, 1 / 160]])


def model(y=(1.0, 2.0, 3.0)):
    return LinearNuisanceModel(np.asarray(y, dtype=float), H, G)


def computed():
    """Every quantity of the worked example, computed from ``H`` and ``G``."""
    art = osp_artifacts(G)
    plan = build_plan(G, ReferencePolicy.fixed(REFERENCES))
    return {
        "jls_weights": joint_ls_weights(H, G),
        "projector": art.projector,
        "basis_outer": art.basis @ art.basis.T,
        "step1": plan.steps[0].op,
        "step1_G": plan.steps[0].op @ G,
        "step2": plan.steps[1].op,
        "total": plan.total,
        "PtP": plan.whitener.T @ plan.whitener,
    }


def checks():
    """``(name, computed, expected, tolerance)`` for each reference value."""
    c = computed()
    n = NULL_BASIS[:, None]
    return [
        ("JLS weight matrix", c["jls_weights"], JLS_WEIGHTS, 1e-9),
        ("orthogonal projector", c["projector"], PROJECTOR, 5e-5),
        ("null-space basis U_n U_n^T", c["basis_outer"], n @ n.T, 1e-4),
        ("step 1 operator", c["step1"], STEP1, 1e-12),
        ("step 1 operator times G", c["step1_G"], STEP1_G, 1e-12),
        ("step 2 operator", c["step2"], STEP2, 1e-12),
        ("total operator", c["total"], TOTAL, 1e-12),
        ("P^T P vs projector", c["PtP"], c["projector"], 1e-10),
    ]

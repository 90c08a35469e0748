"""Randomized property suites checking that every route to the BLUE agrees.

Each suite draws its models from ``(seed, suite, instance)``-keyed streams,
so reports are reproducible and instances can be replayed individually.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .differencing import (
    FIRST_NONZERO,
    LARGEST_MAGNITUDE,
    ZERO_TOL_REL,
    ReferencePolicy,
    build_plan,
    differential_estimate,
    differential_estimate_unwhitened,
    generalized_blue,
    pairwise_difference_operator,
    step_operator,
)
from .estimators import joint_ls, osp_artifacts, osp_estimate_type1, osp_estimate_type2
from .linmodel import LinearNuisanceModel, dumps_model

EST_RTOL = 1e-8
PROJ_ATOL = 1e-9
PROJ_STRICT_ATOL = 1e-10


@dataclass
class SuiteResult:
    name: str
    count: int
    worst: float
    tolerance: float
    failure_index: Optional[int] = None
    failure_model: Optional[LinearNuisanceModel] = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.failure_index is None

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.count} instances, worst {self.worst:.3e} (tol {self.tolerance:.0e})"


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def random_model(rng, n_range=(4, 12), l_range=(1, 4), m_range=(1, 4), noise=0.1):
    """Gaussian model with ``N >= L + M + 1``."""
    L = int(rng.integers(l_range[0], l_range[1] + 1))
    M = int(rng.integers(m_range[0], m_range[1] + 1))
    N = int(rng.integers(max(n_range[0], L + M + 1), n_range[1] + 1))
    H = rng.standard_normal((N, L))
    G = rng.standard_normal((N, M))
    x = rng.standard_normal(L)
    u = rng.standard_normal(M)
    return LinearNuisanceModel.synthesize(H, G, x, u, noise * rng.standard_normal(N), noise)


def random_fixed_policy(rng, G):
    """Fixed policy whose reference at each step is a uniformly random
    non-zero entry of the current nuisance column."""
    cols = [G[:, c] for c in range(G.shape[1])]
    picks = []
    while cols:
        g = cols[0]
        j = int(rng.choice(np.flatnonzero(np.abs(g) > ZERO_TOL_REL * np.max(np.abs(g)))))
        picks.append(j)
        op, _, _ = step_operator(g, j)
        cols = [op @ c for c in cols[1:]]
    return ReferencePolicy.fixed(picks)


def _rel_dev(a, b):
    return float(np.max(np.abs(a - b) / (1.0 + np.abs(a))))


def _run(name, count, tol, check):
    worst = 0.0
    for i in range(count):
        dev, model = check(i)
        worst = max(worst, dev)
        if not dev <= tol:
            return SuiteResult(name, count, worst, tol, i, model)
    return SuiteResult(name, count, worst, tol)


def suite_equivalence(count=1000, seed=0):
    """Joint, both projection variants and differential estimates coincide."""

    def check(i):
        model = random_model(_rng(seed, 1, i))
        art = osp_artifacts(model.G)
        xj = joint_ls(model).x_hat
        x1 = osp_estimate_type1(model, art).x_hat
        x2 = osp_estimate_type2(model, art).x_hat
        plan = build_plan(model)
        xd = differential_estimate(model, plan).x_hat
        dev = max(_rel_dev(xj, x1), _rel_dev(xj, x2), _rel_dev(xj, xd))
        PtP = plan.whitener.T @ plan.whitener
        UUt = art.basis @ art.basis.T
        proj = max(np.max(np.abs(PtP - art.projector)), np.max(np.abs(UUt - art.projector)))
        # scale the projector check into the estimator tolerance budget
        return max(dev, proj * EST_RTOL / PROJ_ATOL), model

    return _run("equivalence", count, EST_RTOL, check)


def reference_policies(rng, model, count=5, attempts=50):
    """Up to ``count`` policies that pick pairwise different reference rows.

    The two rule-based policies come first, random fixed ones fill the rest.
    Fewer are returned only when the model admits fewer distinct reference
    sequences (e.g. ``N = 4`` with one nuisance column).
    """
    found = {}
    for policy in (ReferencePolicy(LARGEST_MAGNITUDE), ReferencePolicy(FIRST_NONZERO)):
        found.setdefault(build_plan(model.G, policy).references, policy)
    for _ in range(attempts):
        if len(found) >= count:
            break
        policy = random_fixed_policy(rng, model.G)
        found.setdefault(policy.indices, policy)
    return list(found.values())[:count]


def suite_reference_invariance(count=1000, seed=0, whiten=True):
    """Differential estimates do not depend on the reference rows chosen.

    With ``whiten=False`` the suite exercises the unwhitened estimator and is
    expected to fail; it serves as a negative control.
    """
    estimator = differential_estimate if whiten else differential_estimate_unwhitened

    def check(i):
        rng = _rng(seed, 2, i)
        model = random_model(rng)
        xs = [estimator(model, build_plan(model, p)).x_hat for p in reference_policies(rng, model)]
        return max(_rel_dev(xs[0], x) for x in xs[1:]), model

    name = "reference-invariance" if whiten else "reference-invariance (unwhitened)"
    return _run(name, count, EST_RTOL, check)


def suite_projector(count=1000, seed=0):
    """``I - G G^+`` is symmetric, idempotent and cancels ``G``."""

    def check(i):
        model = random_model(_rng(seed, 3, i))
        P = osp_artifacts(model.G).projector
        dev = max(
            np.max(np.abs(P - P.T)),
            np.max(np.abs(P @ P - P)),
            np.max(np.abs(P @ model.G)),
        )
        return float(dev), model

    return _run("projector", count, PROJ_STRICT_ATOL, check)


def suite_subset_sufficiency(count=100, seed=0):
    """With one nuisance column, ``N - 1`` single-reference differences carry
    as much information as all ``N(N-1)/2`` pairwise differences."""

    def check(i):
        rng = _rng(seed, 4, i)
        model = random_model(rng, n_range=(3, 6), l_range=(1, 2), m_range=(1, 1))
        g = model.G[:, 0]
        x_single = differential_estimate(model, build_plan(model)).x_hat
        x_all = generalized_blue(model.H, model.y, pairwise_difference_operator(g))
        return _rel_dev(x_single, x_all), model

    return _run("subset-sufficiency", count, EST_RTOL, check)


def run_all(count=1000, seed=0, fault=None):
    """Run every suite; ``fault="skip-whitening"`` swaps in the unwhitened
    differential estimator for the reference-invariance suite."""
    return [
        suite_equivalence(count, seed),
        suite_reference_invariance(count, seed, whiten=fault != "skip-whitening"),
        suite_projector(count, seed),
        suite_subset_sufficiency(min(count, 100), seed),
    ]


def failure_report(result):
    if result.passed:
        return ""
    return f"first failure in {result.name} at instance {result.failure_index}\n" + dumps_model(
        result.failure_model
    )

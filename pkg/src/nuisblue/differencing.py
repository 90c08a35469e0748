"""Reference-based differencing for one or many linear nuisance parameters.

Each elimination step divides the observations touched by the current
nuisance column by that column's entries and subtracts a reference row, which
cancels one nuisance parameter and drops one row. Chaining ``M`` steps gives a
total operator ``Gamma`` with ``Gamma @ G == 0``; whitening the differenced
noise with ``(Gamma Gamma^T)^{-1/2}`` yields the whitener ``P``. Because
``P^T P`` equals the orthogonal complement projector of ``G`` whatever
references were picked, the resulting estimate does not depend on them.

Indices are 0-based throughout.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import (
    IndexOutOfRange,
    RankDeficient,
    RankViolation,
    ReferenceOnZeroRow,
    TooFewNonZeros,
)
from .linmodel import EstimateReport, LinearNuisanceModel, validate
from .matkernel import as_matrix, lstsq_qr, polar_rows

ZERO_TOL_REL = 1e-12
_VANISH_TOL = 1e-10

FIXED = "fixed"
FIRST_NONZERO = "first_nonzero"
LARGEST_MAGNITUDE = "largest_magnitude"


@dataclass(frozen=True)
class ReferencePolicy:
    """How the reference row is chosen at each elimination step.

    ``fixed`` uses ``indices[k]`` (an index into the current, already reduced
    vector) at step ``k``; the other modes look at the current nuisance column.
    """

    mode: str = LARGEST_MAGNITUDE
    indices: Optional[tuple] = None

    def __post_init__(self):
        if self.mode not in (FIXED, FIRST_NONZERO, LARGEST_MAGNITUDE):
            raise ValueError(f"unknown reference mode {self.mode!r}")
        if self.mode == FIXED:
            if self.indices is None:
                raise ValueError("fixed policy needs indices")
            object.__setattr__(self, "indices", tuple(int(j) for j in self.indices))

    @classmethod
    def fixed(cls, indices):
        return cls(FIXED, tuple(indices))

    def choose(self, g, nonzero, step):
        if self.mode == FIXED:
            if step >= len(self.indices):
                raise ValueError(
                    f"fixed policy has {len(self.indices)} indices, step {step} requested"
                )
            return self.indices[step]
        candidates = np.flatnonzero(nonzero)
        if self.mode == FIRST_NONZERO:
            return int(candidates[0]) if candidates.size else 0
        return int(np.argmax(np.abs(g)))


@dataclass(frozen=True, eq=False)
class StepRecord:
    k: int
    reference_j: int
    zero_count_K: int
    op: np.ndarray
    zero_rows: tuple = ()
    row_sources: tuple = ()


@dataclass(frozen=True, eq=False)
class DifferencingPlan:
    steps: tuple
    total: np.ndarray
    whitener: np.ndarray
    order: tuple = field(default=())

    @property
    def references(self):
        return tuple(s.reference_j for s in self.steps)

    def reduce(self, model):
        """Whitened differential model ``P y = P H x + P n``."""
        P = self.whitener
        return LinearNuisanceModel(P @ model.y, P @ model.H, np.zeros((P.shape[0], 0)), model.sigma)


def single_ref_operator(N, j):
    """(N-1) x N operator whose rows compute ``y_i - y_j`` for ``i != j``."""
    if N < 2:
        raise ValueError("need N >= 2")
    if not 0 <= j < N:
        raise IndexOutOfRange(f"reference {j} outside 0..{N - 1}")
    rows = [i for i in range(N) if i != j]
    op = np.zeros((N - 1, N))
    op[np.arange(N - 1), rows] = 1.0
    op[:, j] = -1.0
    return op


def average_ref_operator(N):
    """``I - (1/N) 11^T``: subtract the mean of the observations."""
    if N < 2:
        raise ValueError("need N >= 2")
    return np.eye(N) - np.full((N, N), 1.0 / N)


def pairwise_difference_operator(g):
    """All ``N(N-1)/2`` scaled differences ``y_i/g_i - y_j/g_j`` for ``i < j``.

    ``g`` may be an integer ``N`` (meaning the all-ones column).
    """
    if np.isscalar(g):
        g = np.ones(int(g))
    g = np.asarray(g, dtype=float).reshape(-1)
    if np.any(g == 0):
        raise TooFewNonZeros("pairwise differencing needs a column without zeros")
    N = g.size
    ii, jj = np.triu_indices(N, k=1)
    op = np.zeros((ii.size, N))
    r = np.arange(ii.size)
    op[r, ii] = 1.0 / g[ii]
    op[r, jj] = -1.0 / g[jj]
    return op


def step_operator(g, j, zero_tol=None):
    """Build one elimination operator for the nuisance column ``g``.

    Returns ``(op, zero_rows, row_sources)``. Rows where ``g`` is (numerically)
    zero pass through unchanged; every other row except ``j`` becomes
    ``d_i / g_i - d_j / g_j``. Output rows keep the original row order.
    """
    g = np.asarray(g, dtype=float).reshape(-1)
    n = g.size
    if zero_tol is None:
        zero_tol = ZERO_TOL_REL * np.max(np.abs(g)) if n else 0.0
    nonzero = np.abs(g) > zero_tol
    if np.count_nonzero(nonzero) < 2:
        raise TooFewNonZeros(
            f"nuisance column has {np.count_nonzero(nonzero)} usable entries, need 2"
        )
    if not 0 <= j < n:
        raise IndexOutOfRange(f"reference {j} outside 0..{n - 1}")
    if not nonzero[j]:
        raise ReferenceOnZeroRow(f"reference row {j} is zero in the nuisance column")
    rows = tuple(i for i in range(n) if i != j)
    op = np.zeros((n - 1, n))
    for r, i in enumerate(rows):
        if nonzero[i]:
            op[r, i] = 1.0 / g[i]
            op[r, j] = -1.0 / g[j]
        else:
            op[r, i] = 1.0
    zero_rows = tuple(int(i) for i in np.flatnonzero(~nonzero))
    return op, zero_rows, rows


def eliminate_step(d_prev, H_prev, g_cols_prev, j, zero_tol=None, k=1):
    """Cancel the leading nuisance column of ``g_cols_prev``.

    Returns ``(record, d_next, H_next, g_cols_next)`` where ``g_cols_next``
    holds the remaining (transformed) nuisance columns.
    """
    g_cols_prev = [np.asarray(g, dtype=float).reshape(-1) for g in g_cols_prev]
    if not g_cols_prev:
        raise ValueError("no nuisance column left to eliminate")
    op, zero_rows, rows = step_operator(g_cols_prev[0], j, zero_tol)
    record = StepRecord(
        k=k,
        reference_j=int(j),
        zero_count_K=len(zero_rows),
        op=op,
        zero_rows=zero_rows,
        row_sources=rows,
    )
    d_next = op @ np.asarray(d_prev, dtype=float)
    H_next = op @ np.asarray(H_prev, dtype=float)
    g_next = [op @ g for g in g_cols_prev[1:]]
    return record, d_next, H_next, g_next


def build_plan(model_or_G, policy=None, order=None):
    """Run the ``M`` elimination steps and assemble ``Gamma`` and ``P``.

    ``model_or_G`` is a :class:`LinearNuisanceModel` or a bare nuisance matrix.
    ``order`` permutes the elimination order of the nuisance columns.
    """
    if isinstance(model_or_G, LinearNuisanceModel):
        validate(model_or_G)
        G = model_or_G.G
    else:
        G = as_matrix(model_or_G, "G")
    policy = policy or ReferencePolicy()
    N, M = G.shape
    order = tuple(range(M)) if order is None else tuple(int(c) for c in order)
    if sorted(order) != list(range(M)):
        raise ValueError(f"order must be a permutation of 0..{M - 1}")

    total = np.eye(N)
    cols = [G[:, c] for c in order]
    steps = []
    for k in range(M):
        g = cols[0]
        # a column in the span of the ones already eliminated collapses to ~0
        scale = np.linalg.norm(total) * np.linalg.norm(G[:, order[k]])
        if np.max(np.abs(g), initial=0.0) <= _VANISH_TOL * scale:
            raise TooFewNonZeros(f"nuisance column {order[k]} vanished after {k} steps")
        nonzero = np.abs(g) > ZERO_TOL_REL * np.max(np.abs(g))
        j = policy.choose(g, nonzero, k)
        record, _, total, cols = eliminate_step(np.zeros(len(g)), total, cols, j, k=k + 1)
        steps.append(record)
    if M == 0:
        whitener = np.eye(N)
    else:
        whitener = polar_rows(total)
    return DifferencingPlan(tuple(steps), total, whitener, order)


def _operator_of(plan):
    return plan.total if isinstance(plan, DifferencingPlan) else as_matrix(plan, "operator")


def _check_annihilates(op, G):
    if G.shape[1] == 0:
        return
    scale = max(np.linalg.norm(op) * np.linalg.norm(G), 1.0)
    if np.max(np.abs(op @ G)) > _VANISH_TOL * scale:
        raise ValueError("operator does not cancel the model's nuisance columns")


def _solve(A, b, method):
    try:
        x = lstsq_qr(A, b)
    except RankDeficient as exc:
        raise RankViolation(str(exc)) from exc
    return EstimateReport(x_hat=x, method=method, residual_norm=float(np.linalg.norm(b - A @ x)))


def differential_estimate(model, plan=None, policy=None):
    """Least squares on the whitened differential model ``P y = P H x``."""
    validate(model)
    if plan is None:
        plan = build_plan(model, policy)
    _check_annihilates(plan.total, model.G)
    P = plan.whitener
    return _solve(P @ model.H, P @ model.y, "DIFF")


def differential_estimate_unwhitened(model, plan=None, policy=None):
    """Plain least squares on ``Gamma y = Gamma H x``, ignoring noise correlation.

    ``plan`` may also be a bare operator (e.g. :func:`average_ref_operator`).
    """
    validate(model)
    if plan is None:
        plan = build_plan(model, policy)
    op = _operator_of(plan)
    _check_annihilates(op, model.G)
    return _solve(op @ model.H, op @ model.y, "DIFF_UNWHITENED")


def generalized_blue(H, y, op, rcond=1e-10):
    """BLUE from differenced data ``op y`` whose noise covariance ``op op^T``
    may be singular; the weight is its pseudo-inverse."""
    H = as_matrix(H, "H")
    op = as_matrix(op, "operator")
    W = np.linalg.pinv(op @ op.T, rcond=rcond, hermitian=True)
    A = op @ H
    b = op @ np.asarray(y, dtype=float)
    return np.linalg.solve(A.T @ W @ A, A.T @ W @ b)


def dump_plan(plan):
    """Debug listing of every step (reference, zero count, operator rows)."""
    out = [f"order {' '.join(str(c) for c in plan.order)}"]
    for s in plan.steps:
        out.append(f"step {s.k} j={s.reference_j} K={s.zero_count_K}")
        out.extend(" ".join(format(v, ".17g") for v in row) for row in s.op)
    out.append("total")
    out.extend(" ".join(format(v, ".17g") for v in row) for row in plan.total)
    return "\n".join(out) + "\n"

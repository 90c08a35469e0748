import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nuisblue import illustrative
from nuisblue.differencing import (
    FIRST_NONZERO,
    ReferencePolicy,
    average_ref_operator,
    build_plan,
    differential_estimate,
    differential_estimate_unwhitened,
    dump_plan,
    eliminate_step,
    generalized_blue,
    pairwise_difference_operator,
    single_ref_operator,
    step_operator,
)
from nuisblue.estimators import joint_ls, osp_artifacts, osp_estimate_type1
from nuisblue.exceptions import (
    IndexOutOfRange,
    ReferenceOnZeroRow,
    TooFewNonZeros,
)
from nuisblue.linmodel import LinearNuisanceModel
from nuisblue.verification import random_fixed_policy

from conftest import make_model, relerr


def test_single_reference_operator_examples():
    np.testing.assert_array_equal(single_ref_operator(3, 2), [[1, 0, -1], [0, 1, -1]])
    np.testing.assert_array_equal(single_ref_operator(3, 1), [[1, -1, 0], [0, -1, 1]])
    for N in range(2, 8):
        for j in range(N):
            assert not np.any(single_ref_operator(N, j) @ np.ones(N))
    with pytest.raises(IndexOutOfRange):
        single_ref_operator(3, 3)
    with pytest.raises(IndexError):
        single_ref_operator(3, -1)


def test_average_reference_operator():
    np.testing.assert_allclose(average_ref_operator(2), [[0.5, -0.5], [-0.5, 0.5]])
    np.testing.assert_allclose(average_ref_operator(6) @ np.full(6, 4.2), 0.0, atol=1e-14)
    for N in (3, 7):
        np.testing.assert_allclose(
            average_ref_operator(N), osp_artifacts(np.ones((N, 1))).projector, atol=1e-12
        )


def test_illustrative_steps_are_exact():
    G = illustrative.G
    rec1, _, _, g_next = eliminate_step(np.zeros(3), np.eye(3), [G[:, 0], G[:, 1]], 2)
    np.testing.assert_allclose(rec1.op, [[1 / 3, 0, -1 / 2], [0, 1 / 5, -1 / 2]], atol=1e-12)
    np.testing.assert_allclose(rec1.op @ G, [[0, -10 / 3], [0, -16 / 5]], atol=1e-12)
    op2, _, _ = step_operator(g_next[0], 0)
    np.testing.assert_allclose(op2, [[3 / 10, -5 / 16]], atol=1e-12)
    plan = build_plan(G, ReferencePolicy.fixed(illustrative.REFERENCES))
    np.testing.assert_allclose(plan.total, [[1 / 10, -1 / 16, 1 / 160]], atol=1e-12)
    assert plan.references == (2, 0)


def test_leading_zero_row_passes_through():
    g = np.array([0.0, 2.0, -1.0, 4.0])
    op, zero_rows, rows = step_operator(g, 3)
    assert zero_rows == (0,)
    np.testing.assert_array_equal(op[0], [1, 0, 0, 0])
    np.testing.assert_allclose(op @ g, 0.0, atol=1e-15)
    assert rows == (0, 1, 2)


def test_step_operator_errors():
    with pytest.raises(TooFewNonZeros):
        step_operator([0.0, 0.0, 3.0], 2)
    with pytest.raises(ReferenceOnZeroRow):
        step_operator([0.0, 1.0, 3.0], 0)
    with pytest.raises(IndexOutOfRange):
        step_operator([1.0, 1.0, 3.0], 5)


def test_step_operator_annihilates_and_has_full_rank(rng):
    for _ in range(50):
        g = rng.standard_normal(int(rng.integers(2, 10)))
        g[rng.random(g.size) < 0.2] = 0.0
        if np.count_nonzero(g) < 2:
            continue
        j = int(rng.choice(np.flatnonzero(g)))
        op, _, _ = step_operator(g, j)
        np.testing.assert_allclose(op @ g, 0.0, atol=1e-10)
        assert np.linalg.matrix_rank(op) == g.size - 1


def test_one_nuisance_plan_reduces_to_single_reference():
    for N in (3, 6):
        for j in range(N):
            plan = build_plan(np.ones((N, 1)), ReferencePolicy.fixed([j]))
            np.testing.assert_allclose(plan.total, single_ref_operator(N, j), atol=1e-15)


def test_plan_invariants(rng):
    for _ in range(40):
        m, _, _ = make_model(rng, int(rng.integers(5, 12)), 1, int(rng.integers(1, 4)))
        plan = build_plan(m)
        P = plan.whitener
        N, M = m.N, m.M
        np.testing.assert_allclose(plan.total @ m.G, 0.0, atol=1e-10)
        assert np.linalg.matrix_rank(plan.total) == N - M
        np.testing.assert_allclose(P @ P.T, np.eye(N - M), atol=1e-9)
        np.testing.assert_allclose(P.T @ P, osp_artifacts(m.G).projector, atol=1e-9)


def test_two_policies_give_different_p_but_same_projector(rng):
    m, _, _ = make_model(rng, 8, 2, 2)
    a = build_plan(m, ReferencePolicy.fixed([0, 0]))
    b = build_plan(m, ReferencePolicy.fixed([5, 3]))
    assert np.max(np.abs(a.whitener - b.whitener)) > 1e-3
    np.testing.assert_allclose(a.whitener.T @ a.whitener, b.whitener.T @ b.whitener, atol=1e-9)


def test_first_nonzero_skips_zero_rows():
    G = np.array([[0.0], [0.0], [2.0], [1.0], [3.0]])
    plan = build_plan(G, ReferencePolicy(FIRST_NONZERO))
    assert plan.references == (2,)
    assert plan.steps[0].zero_count_K == 2


def test_dependent_nuisance_column_is_reported():
    G = np.array([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0], [1.0, 2.0]])
    with pytest.raises(TooFewNonZeros):
        build_plan(G)


def test_differential_matches_joint_on_illustrative_case(rng):
    y = rng.standard_normal(3)
    m = illustrative.model(y)
    plan = build_plan(m, ReferencePolicy.fixed(illustrative.REFERENCES))
    np.testing.assert_allclose(differential_estimate(m, plan).x_hat, joint_ls(m).x_hat, atol=1e-9)


def test_differential_zero_noise(rng):
    for _ in range(10):
        m, x, _ = make_model(rng, 9, 2, 3, noise=0.0)
        np.testing.assert_allclose(differential_estimate(m).x_hat, x, atol=1e-9)
        np.testing.assert_allclose(differential_estimate_unwhitened(m).x_hat, x, atol=1e-9)


def test_differential_sweep_against_osp(rng):
    for _ in range(200):
        N = int(rng.integers(4, 13))
        L = int(rng.integers(1, 5))
        M = int(rng.integers(1, 5))
        if N < L + M + 1:
            continue
        m, _, _ = make_model(rng, N, L, M)
        ref = osp_estimate_type1(m).x_hat
        for policy in (ReferencePolicy(), ReferencePolicy(FIRST_NONZERO), random_fixed_policy(rng, m.G)):
            got = differential_estimate(m, policy=policy)
            assert got.method == "DIFF"
            assert relerr(got.x_hat, ref) < 1e-8


def test_unwhitened_average_reference_equals_osp(rng):
    for _ in range(20):
        N = int(rng.integers(4, 10))
        H = rng.standard_normal((N, 2))
        m = LinearNuisanceModel.synthesize(H, np.ones((N, 1)), [1.0, -2.0], [7.0], rng.standard_normal(N))
        got = differential_estimate_unwhitened(m, average_ref_operator(N))
        assert relerr(got.x_hat, osp_estimate_type1(m).x_hat) < 1e-10


def test_unwhitened_operator_must_cancel_nuisance(rng):
    m, _, _ = make_model(rng, 6, 1, 1)
    with pytest.raises(ValueError):
        differential_estimate_unwhitened(m, single_ref_operator(6, 0))


def test_unwhitened_variance_is_not_smaller():
    rng = np.random.default_rng(11)
    N = 8
    H = rng.standard_normal((N, 1))
    G = np.column_stack([np.ones(N), rng.uniform(0.5, 3.0, N)])
    plan = build_plan(G, ReferencePolicy.fixed([0, 0]))
    noise = rng.standard_normal((10_000, N))
    P, T = plan.whitener, plan.total
    w = np.linalg.lstsq(P @ H, P, rcond=None)[0]
    u = np.linalg.lstsq(T @ H, T, rcond=None)[0]
    var_w = np.var(noise @ w.ravel())
    var_u = np.var(noise @ u.ravel())
    assert var_u >= 0.95 * var_w
    # the gap is real for this geometry, not a sampling accident
    assert (u @ u.T).item() > 1.05 * (w @ w.T).item()


def test_pairwise_operator_shape_and_cancellation(rng):
    g = rng.uniform(0.5, 2.0, 5)
    op = pairwise_difference_operator(g)
    assert op.shape == (10, 5)
    np.testing.assert_allclose(op @ g, 0.0, atol=1e-14)
    assert np.linalg.matrix_rank(op) == 4
    np.testing.assert_array_equal(pairwise_difference_operator(3), [[1, -1, 0], [1, 0, -1], [0, 1, -1]])


def test_all_pairs_carry_no_extra_information(rng):
    for _ in range(30):
        N = int(rng.integers(3, 7))
        m, _, _ = make_model(rng, N, 1, 1)
        g = m.G[:, 0]
        single = build_plan(m).total
        full = pairwise_difference_operator(g)
        a = generalized_blue(m.H, m.y, single)
        b = generalized_blue(m.H, m.y, full)
        assert relerr(b, a) < 1e-8
        assert relerr(a, joint_ls(m).x_hat) < 1e-8


def test_dump_plan_lists_each_step():
    plan = build_plan(illustrative.G, ReferencePolicy.fixed(illustrative.REFERENCES))
    text = dump_plan(plan)
    assert "step 1 j=2 K=0" in text
    assert "step 2 j=0 K=0" in text
    assert float(text.splitlines()[-1].split()[0]) == pytest.approx(0.1, abs=1e-15)


@settings(max_examples=80, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    N=st.integers(4, 10),
    L=st.integers(1, 3),
    M=st.integers(1, 3),
)
def test_estimate_ignores_references_and_order(seed, N, L, M):
    if N < L + M + 1:
        return
    rng = np.random.default_rng(seed)
    m, _, _ = make_model(rng, N, L, M)
    base = differential_estimate(m).x_hat
    order = tuple(int(c) for c in rng.permutation(M))
    for plan in (
        build_plan(m, random_fixed_policy(rng, m.G)),
        build_plan(m, order=order),
    ):
        assert relerr(differential_estimate(m, plan).x_hat, base) < 1e-8

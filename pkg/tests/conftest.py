import numpy as np
import pytest

from nuisblue.linmodel import LinearNuisanceModel


def gauss_solve(A, B):
    """Gaussian elimination with partial pivoting, written out by hand.

    Used as an oracle that shares no code with the QR-based kernel.
    """
    A = np.array(A, dtype=float)
    B = np.array(B, dtype=float)
    vec = B.ndim == 1
    if vec:
        B = B[:, None]
    n = A.shape[0]
    aug = np.hstack([A, B])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        for row in range(col + 1, n):
            f = aug[row, col] / aug[col, col]
            aug[row, col:] -= f * aug[col, col:]
    X = np.zeros_like(B)
    for row in range(n - 1, -1, -1):
        X[row] = (aug[row, n:] - aug[row, row + 1 : n] @ X[row + 1 :]) / aug[row, row]
    return X[:, 0] if vec else X


def normal_equations_pinv(A):
    A = np.asarray(A, dtype=float)
    return gauss_solve(A.T @ A, A.T)


def relerr(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def make_model(rng, N, L, M, noise=0.1):
    H = rng.standard_normal((N, L))
    G = rng.standard_normal((N, M))
    x = rng.standard_normal(L)
    u = rng.standard_normal(M)
    return LinearNuisanceModel.synthesize(H, G, x, u, noise * rng.standard_normal(N), noise), x, u


@pytest.fixture
def rng():
    return np.random.default_rng(20170612)


@pytest.fixture
def oracle():
    return gauss_solve


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in _ACCEPTANCE:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict} {name} ({duration:.2f} s)")

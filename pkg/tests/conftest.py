import numpy as np
import pytest


def gauss_solve(A, b):
    """Dense Gaussian elimination with partial pivoting, written out by hand.

    Used as an independent oracle; deliberately avoids LAPACK.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = A.shape[0]
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if p != k:
            A[[k, p]] = A[[p, k]]
            b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            f = A[i, k] / A[k, k]
            A[i, k:] -= f * A[k, k:]
            b[i] -= f * b[k]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - A[i, i + 1:] @ x[i + 1:]) / A[i, i]
    return x


def kernel_loop(kind, a, b, sigma=None):
    """Scalar kernel straight from the closed forms, one pair at a time."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    r = float(np.sqrt(np.sum((a - b) ** 2)))
    if kind == "wendland":
        return (1 - r) ** 4 * (4 * r + 1) if r <= 1 else 0.0
    if kind == "gaussian":
        return float(np.exp(-r * r / (2 * sigma * sigma)))
    return 1 + min(float(a[0]), float(b[0]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance results, printed once at the end of the session.
ACCEPTANCE = {}


def record(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")

import numpy as np
import pytest

from l0kit.data import Dataset


def textbook_cholesky(A):
    """Cholesky-Banachiewicz, row by row; independent of LAPACK."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    L = np.zeros_like(A)
    for i in range(n):
        for j in range(i + 1):
            s = A[i, j] - sum(L[i, k] * L[j, k] for k in range(j))
            L[i, j] = np.sqrt(s) if i == j else s / L[j, j]
    return L


def random_gram(rng, p, extra=5):
    A = rng.standard_normal((p + extra, p))
    return A.T @ A


def small_instance(seed, n=20, p=8, k_true=2, snr_db=20.0):
    """Normalized regression instance with a planted sparse signal."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[rng.choice(p, k_true, replace=False)] = rng.choice([-2.0, -1.0, 1.0, 2.0], k_true)
    Xc = X - X.mean(axis=0)
    Xn = Xc / np.linalg.norm(Xc, axis=0)
    signal = Xn @ beta
    sigma = np.sqrt(np.var(signal, ddof=1) * 10 ** (-snr_db / 10))
    y = signal + sigma * rng.standard_normal(n)
    return Dataset(Xn, y - y.mean()), beta


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one verdict per acceptance criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

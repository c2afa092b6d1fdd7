import numpy as np
import pytest

from bitscreen import center_response, standardize


def gaussian_instance(seed, n=50, p=12, k=3, noise=1.0):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(n, p)) * rng.uniform(0.5, 3.0, size=p) + rng.normal(size=p)
    beta = np.zeros(p)
    beta[rng.choice(p, k, replace=False)] = rng.uniform(0.5, 2.0, size=k) * rng.choice([-1, 1], size=k)
    y = Z @ beta + noise * rng.normal(size=n)
    return Z, y


def orthogonal_instance(seed, n=64, p=63, s=5, beta=2.0, sigma=0.2):
    """Centered design with X^T X = n I and a random truth of size s."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, p))
    A -= A.mean(axis=0)
    Q, _ = np.linalg.qr(A)
    X = Q * np.sqrt(n)
    t = np.sort(rng.choice(p, s, replace=False))
    y = X[:, t] @ np.full(s, beta) + sigma * rng.normal(size=n)
    return X, y, t


@pytest.fixture
def small_problem():
    Z, y = gaussian_instance(0)
    return standardize(Z), center_response(y)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line and fail the test when it did not pass."""

    def record(number, name, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

import numpy as np
import pytest


def random_cov(rng, n):
    """Random covariance with mixed-sign correlations and uneven scales."""
    g = rng.normal(size=(n, n + 1))
    a = g @ g.T / (n + 1) + 0.05 * np.eye(n)
    s = np.exp(rng.uniform(-1, 1, size=n))
    return a * np.outer(s, s)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one (number, title, passed, detail) entry per acceptance criterion
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} [{number}] {title}: {detail}")

import numpy as np
import pytest
from scipy.linalg import toeplitz

from rmtda.harness import SyntheticGeometry, build_synthetic
from rmtda.model import ProblemInstance


@pytest.fixture(scope="session")
def setup_a():
    """p = 200, n0 = n1 = 200, Toeplitz 0.6 and spiked second class."""
    return build_synthetic(SyntheticGeometry(p=200, n0=200, n1=200))


@pytest.fixture
def small_instance():
    rng = np.random.default_rng(0)
    p = 6
    a = rng.standard_normal((p, p))
    b = rng.standard_normal((p, p))
    return ProblemInstance.from_arrays(
        rng.standard_normal(p), a @ a.T / p + np.eye(p), rng.standard_normal(p), b @ b.T / p + 0.5 * np.eye(p)
    )


def toeplitz_cov(p: int, ratio: float = 0.6) -> np.ndarray:
    return toeplitz(ratio ** np.arange(p))


def mock_fit(mu0, mu1, s0, s1, gamma=1.0, n0=10, n1=10, priors=(0.5, 0.5), pooled=None):
    """FittedDA with hand-picked statistics."""
    from rmtda.model import FittedDA

    s0 = np.atleast_2d(np.asarray(s0, dtype=float))
    s1 = np.atleast_2d(np.asarray(s1, dtype=float))
    if pooled is None:
        pooled = ((n0 - 1) * s0 + (n1 - 1) * s1) / (n0 + n1 - 2)
    return FittedDA(np.atleast_1d(np.asarray(mu0, float)), np.atleast_1d(np.asarray(mu1, float)),
                    s0, s1, np.atleast_2d(pooled), gamma, n0, n1, priors)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

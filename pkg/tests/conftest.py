import numpy as np
import pytest

from symupdate.core import apply_update, random_instance, reconstruct


@pytest.fixture
def golden():
    """diag(0, 1) updated by K = [[1, 0], [1, 1]]: eigenvalues 2 -/+ sqrt(2)."""
    from symupdate.core import LowRankUpdate, SpectralDecomposition

    d = SpectralDecomposition(np.eye(2), [0.0, 1.0])
    u = LowRankUpdate([[1.0, 0.0], [1.0, 1.0]], [1.0, 1.0])
    return d, u


def oracle_eigenvalues(d, u):
    return np.linalg.eigvalsh(apply_update(reconstruct(d), u).entries)


def interval_counts(values, poles):
    edges = np.concatenate([[-np.inf], poles, [np.inf]])
    return np.histogram(values, bins=edges)[0]


def instance(seed, n, k, norm, signs=None):
    return random_instance(n, k, norm, seed, signs)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

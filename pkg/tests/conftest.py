import numpy as np
import pytest

from ggsp.spectral import JointBasis, SpectralBasis


def random_orthogonal(k, rng):
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    return Q * np.sign(np.diag(R))


def random_basis(k, rng, degenerate=False):
    lam = np.sort(rng.uniform(0, 3, k))
    if degenerate and k > 1:
        lam[1] = lam[0]
    return SpectralBasis(lam, random_orthogonal(k, rng), degenerate)


def random_joint(n, d, rng, degenerate=False):
    return JointBasis(random_basis(n, rng, degenerate), random_basis(d, rng, degenerate))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


def record(criterion, ok, detail=""):
    """Log one acceptance line and fail the calling test when ``ok`` is false."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

import numpy as np
import pytest

from ccqlab import channels, linalg


def random_cq(rng, k=None, dim=None, rank=None):
    k = k or int(rng.integers(2, 5))
    dim = dim or int(rng.integers(2, 5))
    return channels.CqChannel(np.stack([linalg.random_density(dim, rng, rank) for _ in range(k)]))


def random_pmf(rng, k):
    return rng.dirichlet(np.ones(k))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bb84():
    return channels.bb84_pair()


@pytest.fixture
def ortho():
    return channels.orthogonal()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

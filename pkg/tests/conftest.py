import numpy as np
import pytest
from hypothesis import settings

from vuclust import make_blobs, synthesize_unaligned

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def blobs3():
    """3-view separated blobs with every column of views 2 and 3 shuffled."""
    base = make_blobs(n=300, k=3, v=3, dims=[5, 5, 5], separation=20.0, seed=3)
    return synthesize_unaligned(base, 0.0, seed=3)

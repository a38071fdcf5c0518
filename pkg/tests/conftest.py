import numpy as np
import pytest

from recomp.stream_model import CompressedStream, SyntheticSpec, generate_labeled

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def synthetic():
    """Default correlated corpus: 56 streams, 8 archetypes, noise 0.05."""
    return generate_labeled(SyntheticSpec())


@pytest.fixture
def small_streams():
    rng = np.random.default_rng(7)
    return [CompressedStream(i, rng.integers(0, 1 << 16, size=n))
            for i, n in enumerate([5, 40, 0, 1, 33])]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

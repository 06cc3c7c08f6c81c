import numpy as np
import pytest

from abcbm.frame_io import Frame, textured_base


@pytest.fixture(scope="session")
def texture():
    return textured_base(272, 240, seed=5, smoothness=3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def brute_sad(cur, prev, x, y, n, u, v):
    """Per-pixel double loop, kept independent of the numpy paths."""
    total = 0
    for j in range(n):
        for i in range(n):
            total += abs(int(cur[y + j][x + i]) - int(prev[y + v + j][x + u + i]))
    return total


def random_frame(rng, w, h):
    return Frame(rng.integers(0, 256, size=(h, w), dtype=np.uint8))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

import numpy as np
import pytest

from thermalchain.models import ChainSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_xy_specs(count, n_max, seed=7, n_min=2):
    gen = np.random.default_rng(seed)
    return [
        ChainSpec.xy(int(gen.integers(n_min, n_max + 1)), float(gen.uniform(-1, 1)),
                     float(gen.uniform(-2, 2)))
        for _ in range(count)
    ]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

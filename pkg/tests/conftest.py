import numpy as np
import pytest

from newhouse_lab import kernels
from newhouse_lab.skew import make_bc

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load cached) numba kernels once so timed checks measure
    steady-state runtime."""
    F = make_bc(0.6, 5)
    xs = np.array([0.3, -0.4])
    ys = np.array([0.2, 0.9])
    kernels.iterate_batch(F.theta, xs, ys, np.zeros(2), 2)
    kernels.strip_entry(F.theta, xs, ys, np.zeros(2), 2, 0.05)
    kernels.orbit_trace(F.theta, 0.3, 0.2, 0.0, 2)
    kernels.cone_batch(F.theta, xs, ys, 3, 1, 0.5, 0.3000000001, 0.9)
    kernels.bridge_blockers(np.array([3, 1, 2], dtype=np.int64))
    kernels.pliss_margins(np.log(np.array([0.5, 0.7])), np.log(0.9))
    kernels.range_sums(np.ones(4), np.array([0], dtype=np.int64), np.array([3], dtype=np.int64))
    return F


@pytest.fixture(scope="session")
def bc():
    return make_bc(0.6, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

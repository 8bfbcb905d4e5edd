import sys

import numpy as np
import pytest

from archi import potentials as P


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def even_step():
    """A symmetric three-piece step potential."""
    return P.piecewise_constant([0.0, 0.3, 0.7, 1.0], [2.0, -3.0, 2.0], even=True)


def random_even_step(rng, pieces=5, a=1.0):
    """Random piecewise-constant potential that is exactly mirror symmetric."""
    half = np.sort(rng.uniform(0.05, 0.45, pieces // 2)) * a
    breaks = np.concatenate([[0.0], half, a - half[::-1], [a]])
    vals = rng.uniform(-4, 4, pieces // 2 + 1)
    values = np.concatenate([vals, vals[-2::-1]]) if pieces % 2 else np.concatenate([vals, vals[::-1]])
    values = values[: len(breaks) - 1]
    return P.piecewise_constant(breaks, values, a=a, even=True)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance lines collected during the run, one per criterion."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])

import numpy as np
import pytest

from infostab.domain import make_interior_grid
from infostab.generators import make_exact_log, make_exact_power

CORPUS_ALPHAS = (-5.0, -2.0, -1.0, -0.5, -0.1)
CORPUS_SEED = 20240611

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES = []


def power_corpus():
    """20 seeded (a, b) in [-10, 10]^2 for each corpus alpha: 100 specs."""
    rng = np.random.default_rng(CORPUS_SEED)
    ab = rng.uniform(-10.0, 10.0, size=(20, 2))
    return [(make_exact_power(a, b, al), al, (a, b)) for al in CORPUS_ALPHAS for a, b in ab]


def log_corpus():
    """10 seeded (lam, c) in [-10, 10]^2 at alpha = 0."""
    rng = np.random.default_rng(CORPUS_SEED + 1)
    lc = rng.uniform(-10.0, 10.0, size=(10, 2))
    return [(make_exact_log(lam, c), 0.0, (lam, c)) for lam, c in lc]


@pytest.fixture(scope="session")
def default_grid():
    return make_interior_grid(1e-3, 200)


@pytest.fixture(scope="session")
def coarse_grid():
    return make_interior_grid(1e-2, 40)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import math

import numpy as np
import pytest


def textbook_logrank_z(time, event, group):
    """Observed-minus-expected logrank z for group 1, written as a plain loop."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=bool)
    group = np.asarray(group)
    o_minus_e = 0.0
    var = 0.0
    for t in np.unique(time[event]):
        at_risk = time >= t
        n = at_risk.sum()
        n1 = (at_risk & (group == 1)).sum()
        dies = (time == t) & event
        d = dies.sum()
        d1 = (dies & (group == 1)).sum()
        if n1 == 0 or n1 == n:
            continue
        o_minus_e += d1 - d * n1 / n
        if n > 1:
            var += d * (n1 / n) * (1 - n1 / n) * (n - d) / (n - 1)
    return o_minus_e / math.sqrt(var)


def random_dataset(rng, n_min=6, n_max=40, ties=True):
    n0 = int(rng.integers(n_min // 2, n_max // 2 + 1))
    n1 = int(rng.integers(n_min // 2, n_max // 2 + 1))
    n = n0 + n1
    if ties:
        time = rng.integers(1, 12, n).astype(float)
    else:
        time = rng.exponential(10.0, n)
    event = rng.random(n) < 0.75
    event[0] = True
    group = np.r_[np.zeros(n0, int), np.ones(n1, int)]
    return time, event, group


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Acceptance lines collected by tests/test_acceptance.py, printed at the end of the run.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])

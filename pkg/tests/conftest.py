import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from cyclescope.cycle_metrics import Trajectory

FROZEN = Path(__file__).parent / "oracles" / "frozen.json"


@pytest.fixture(scope="session")
def frozen():
    return json.loads(FROZEN.read_text())


def fractions(values):
    return np.array([float(Fraction(v)) for v in values])


def make_traj(states, sid="s1", game=0):
    return Trajectory(sid, game, tuple(tuple(s) for s in states))


def random_walk(rng, N=12, periods=80):
    """Lattice random walk: one agent switches strategy per step."""
    state = np.bincount(rng.integers(0, 4, N), minlength=4)
    out = [state.copy()]
    for _ in range(periods - 1):
        src = rng.choice(np.flatnonzero(state))
        dst = rng.integers(0, 4)
        state[src] -= 1
        state[dst] += 1
        out.append(state.copy())
    return out


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])

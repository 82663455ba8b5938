import numpy as np
import pytest

from chainlab.fem import solve_mesh
from chainlab.geometry import estimate_geometric_constants
from chainlab.mesh import triangulate
from chainlab.presets import square, two_squares


@pytest.fixture(scope="session")
def dumbbell_config():
    return two_squares(0.5)


@pytest.fixture(scope="session")
def dumbbell_consts(dumbbell_config):
    return estimate_geometric_constants(dumbbell_config.pieces, dumbbell_config.necks)


@pytest.fixture(scope="session")
def dumbbell_dom(dumbbell_config):
    return dumbbell_config.build(0.02)


@pytest.fixture(scope="session")
def square2():
    """Square ``[0, 2]^2``: Neumann eigenfunctions ``cos(m pi x/2) cos(n pi y/2)``."""
    return square(2.0, (1.0, 1.0))


@pytest.fixture(scope="session")
def square2_dom(square2):
    return square2.build(0.05)


@pytest.fixture(scope="session")
def square2_mesh(square2_dom):
    return triangulate(square2_dom, 0.05)


@pytest.fixture(scope="session")
def square2_spectrum(square2_mesh):
    return solve_mesh(square2_mesh, count=30, seed=0)


@pytest.fixture(scope="session")
def unit_square():
    return square(1.0, (0.5, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in rep.nodeid or rep.when != "call":
                continue
            props = dict(rep.user_properties)
            lines.append((props.get("criterion", rep.nodeid), outcome.upper(), props.get("detail", "")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for crit, outcome, detail in sorted(lines, key=lambda r: _crit_key(r[0])):
        terminalreporter.write_line(f"{outcome:6s} {crit}  {detail}")


def _crit_key(name):
    head = name.split()[0].lstrip("A")
    return int(head) if head.isdigit() else 99

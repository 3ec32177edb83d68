import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fcfv.mesh import SimplicialMesh, generate_structured

settings.register_profile(
    "default", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def two_triangles():
    """Unit square split along the (0,0)-(1,1) diagonal."""
    return generate_structured(2, 1)


@pytest.fixture
def unit_triangle():
    return SimplicialMesh.from_cells([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])


@pytest.fixture
def unit_tet():
    return SimplicialMesh.from_cells([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2, 3]])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])

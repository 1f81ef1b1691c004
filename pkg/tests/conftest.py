import numpy as np
import pytest

from isokit import shapes
from isokit.mesh import HalfedgeMesh

# criterion id -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def ico():
    return shapes.icosahedron()


@pytest.fixture
def tet():
    return shapes.tetrahedron()


@pytest.fixture
def cube():
    return shapes.cube()


@pytest.fixture(scope="session")
def small_potato():
    """A 162-vertex potato, cheap enough for driver and remeshing tests."""
    return shapes.potato(2, 0.15, seed=1)


def planar_grid(n=4, spacing=1.0):
    """Flat triangulated square grid as (positions, faces); open, for array-level tests."""
    xs = np.arange(n + 1) * spacing
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    pos = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)])
    faces = []
    for i in range(n):
        for j in range(n):
            a = i * (n + 1) + j
            b, c, d = a + (n + 1), a + 1, a + (n + 1) + 1
            faces += [[a, b, d], [a, d, c]]
    return pos, np.array(faces)


def octahedron_with_apex(height=1.0):
    """Square pyramid closed by a bottom apex (an octahedron stretched in z)."""
    pos = np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0], [0, 0, height], [0, 0, -1.0]])
    faces = [[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4],
             [1, 0, 5], [2, 1, 5], [3, 2, 5], [0, 3, 5]]
    return HalfedgeMesh(pos, faces)

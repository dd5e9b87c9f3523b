import numpy as np
import pytest

from ncstokes.mesh import build_uniform_cube_mesh, geometry_from_vertices

REFERENCE_TET = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def random_tets(rng: np.random.Generator, count: int, min_quality: float = 0.05) -> np.ndarray:
    """Random nondegenerate tetrahedra (volume / diameter^3 bounded below)."""
    out = []
    while len(out) < count:
        x = rng.uniform(-1.0, 1.0, (4, 3))
        vol = abs(np.linalg.det(x[1:] - x[0])) / 6.0
        diam = max(np.linalg.norm(x[i] - x[j]) for i in range(4) for j in range(i))
        if vol / diam**3 > min_quality / 6.0:
            out.append(x)
    return np.array(out)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def mesh1():
    return build_uniform_cube_mesh(1)


@pytest.fixture(scope="session")
def mesh2():
    return build_uniform_cube_mesh(2)


@pytest.fixture
def ref_geom():
    return geometry_from_vertices(REFERENCE_TET)


@pytest.fixture
def random_geom(rng):
    return geometry_from_vertices(random_tets(rng, 100))


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import strategies as st

from axivem.material import make_material
from axivem.mesh import generate_structured_mesh, polygon_geometry


def random_convex_polygon(rng, m=None, r_min=0.5):
    """Vertices of a convex polygon on a random ellipse, all with r >= r_min."""
    m = int(rng.integers(3, 9)) if m is None else m
    while True:
        th = np.sort(rng.uniform(0, 2 * np.pi, m))
        if np.min(np.diff(np.r_[th, th[0] + 2 * np.pi])) < 0.2:
            continue
        a, b = rng.uniform(0.2, 1.5, 2)
        rot = rng.uniform(0, np.pi)
        pts = np.c_[a * np.cos(th), b * np.sin(th)]
        c, s = np.cos(rot), np.sin(rot)
        pts = pts @ np.array([[c, s], [-s, c]])
        pts[:, 0] += r_min - pts[:, 0].min() + rng.uniform(0, 3)
        pts[:, 1] += rng.uniform(-2, 2)
        try:
            return pts, polygon_geometry(pts)
        except ValueError:
            continue


@st.composite
def convex_polygons(draw, min_m=3, max_m=8):
    seed = draw(st.integers(0, 2**32 - 1))
    m = draw(st.integers(min_m, max_m))
    return random_convex_polygon(np.random.default_rng(seed), m)


@st.composite
def materials(draw):
    E = draw(st.floats(0.1, 100.0))
    nu = draw(st.floats(-0.9, 0.49))
    return make_material(E, nu)


@pytest.fixture
def golden_mesh():
    return generate_structured_mesh(1.0, 3.0, 0.0, 2.0, 4, 4)


@pytest.fixture
def steel_like():
    return make_material(1.0, 0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE_LINES]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import numpy as np
import pytest

from ndform.mesh import build_rect_mesh, mesh_from_arrays
from ndform.space import build_space

UNIT = (0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_space():
    def make(n, k, domain=UNIT):
        return build_space(build_rect_mesh(domain, n), k)

    return make


@pytest.fixture
def reference_triangle_space():
    def make(k):
        mesh = mesh_from_arrays([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])
        return build_space(mesh, k)

    return make

import numpy as np
import pytest

from mixfem import build_mesh, rectangle_mesh, get_problem


def perturbed_square(n, amount=0.2, seed=0):
    """ n x n structured mesh of the unit square with interior vertices jittered by `amount` * h. """
    base = rectangle_mesh(n, n)
    rng = np.random.RandomState(seed)
    vertices = base.vertices.copy()
    interior = np.all((vertices > 1e-12) & (vertices < 1.0 - 1e-12), axis=1)
    vertices[interior] += amount / n * rng.uniform(-1.0, 1.0, (interior.sum(), 2))
    return build_mesh(vertices, base.triangles)


@pytest.fixture
def square_mesh():
    return rectangle_mesh(4, 4)


@pytest.fixture
def distorted_mesh():
    return perturbed_square(4)


@pytest.fixture
def smooth_problem():
    return get_problem("smooth")


@pytest.fixture
def interface_problem():
    return get_problem("interface_smooth", jump_ratio=1000.0)


@pytest.fixture
def kellogg_problem():
    return get_problem("kellogg", gamma=0.5)


@pytest.fixture
def perturbed():
    return perturbed_square

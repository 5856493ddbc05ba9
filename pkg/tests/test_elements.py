from math import factorial

import numpy as np
import pytest

from mixfem import (
    SpaceDescriptor,
    UnsupportedDegree,
    UnsupportedOrder,
    dof_functionals,
    flux_basis,
    quadrature,
    scalar_basis,
)
from mixfem.utils.quadrature import corner_graded_rule, edge_quadrature, endpoint_graded_rule

TRIANGLE = np.array([[0.2, -0.1], [1.3, 0.4], [0.1, 0.9]])
FLUX_SPACES = [("RT", 0), ("RT", 1), ("BDM", 1), ("BDM", 2)]


def _to_reference(points, triangle=TRIANGLE):
    J = np.column_stack([triangle[1] - triangle[0], triangle[2] - triangle[0]])
    return np.linalg.solve(J, (np.atleast_2d(points) - triangle[0]).T).T


@pytest.mark.parametrize("family,degree,dim", [
    ("RT", 0, 3), ("RT", 1, 8), ("BDM", 1, 6), ("BDM", 2, 12), ("D", 0, 1), ("D", 3, 10), ("DG", 2, 6),
])
def test_dimensions(family, degree, dim):
    assert SpaceDescriptor(family, degree).dim == dim


def test_unsupported_spaces():
    with pytest.raises(UnsupportedDegree):
        SpaceDescriptor("RT", 2)
    with pytest.raises(UnsupportedDegree):
        SpaceDescriptor("BDM", 0)
    with pytest.raises(ValueError):
        SpaceDescriptor("Nedelec", 1)
    with pytest.raises(UnsupportedDegree):
        scalar_basis(4, np.array([0.2, 0.2]))


def test_divergence_degrees():
    assert SpaceDescriptor("RT", 1).div_degree == 1
    assert SpaceDescriptor("BDM", 2).div_degree == 1
    with pytest.raises(ValueError):
        SpaceDescriptor("D", 1).div_degree


@pytest.mark.parametrize("order", range(1, 13))
def test_triangle_quadrature_exact(order):
    rule = quadrature(order)
    assert rule.weights.sum() == pytest.approx(0.5)
    x, y = rule.ref_points[:, 0], rule.ref_points[:, 1]
    for a in range(order + 1):
        for b in range(order + 1 - a):
            exact = factorial(a) * factorial(b) / float(factorial(a + b + 2))
            assert rule.weights.dot(x ** a * y ** b) == pytest.approx(exact, rel=1e-12, abs=1e-15)


def test_quadrature_order_range():
    with pytest.raises(UnsupportedOrder):
        quadrature(0)
    with pytest.raises(UnsupportedOrder):
        quadrature(21)


def test_graded_rules_integrate_polynomials():
    pts, wts = corner_graded_rule(4, 0, 5)
    assert wts.sum() == pytest.approx(0.5)
    assert wts.dot(pts[:, 0] ** 2 * pts[:, 1]) == pytest.approx(2.0 / 120.0)
    s, w = edge_quadrature(5)
    assert w.dot(s ** 5) == pytest.approx(1.0 / 6.0)


def test_cached_graded_rules_are_read_only():
    pts, wts = corner_graded_rule(4, 0, 3)
    nodes, weights = endpoint_graded_rule(4, 1, 3)
    for array in (pts, wts, nodes, weights):
        assert not array.flags.writeable
    with pytest.raises(ValueError):
        wts *= 2.0
    assert corner_graded_rule(4, 0, 3)[1].sum() == pytest.approx(0.5)
    assert weights.sum() == pytest.approx(1.0)


def test_scalar_basis_monomials():
    point = np.array([0.25, 0.5])
    values, gradients = scalar_basis(2, point)
    assert np.allclose(values, [1.0, 0.25, 0.5, 0.0625, 0.125, 0.25])
    assert np.allclose(gradients[3], [0.5, 0.0])
    assert np.allclose(gradients[4], [0.5, 0.25])


@pytest.mark.parametrize("family,degree", FLUX_SPACES)
def test_basis_dual_to_functionals(family, degree):
    desc = SpaceDescriptor(family, degree)
    duality = np.zeros((desc.dim, desc.dim))
    for j in range(desc.dim):
        def field(points, j=j):
            values, _ = flux_basis(desc, TRIANGLE, _to_reference(points))
            return values[:, j, :]
        duality[:, j] = dof_functionals(desc, TRIANGLE, field)
    assert np.allclose(duality, np.eye(desc.dim), atol=1e-10)


@pytest.mark.parametrize("family,degree", FLUX_SPACES)
def test_piola_divergence_matches_finite_differences(family, degree):
    desc = SpaceDescriptor(family, degree)
    x = np.array([[0.5, 0.3]])
    step = 1e-6
    _, divergence = flux_basis(desc, TRIANGLE, _to_reference(x))
    plus_x, _ = flux_basis(desc, TRIANGLE, _to_reference(x + [step, 0.0]))
    minus_x, _ = flux_basis(desc, TRIANGLE, _to_reference(x - [step, 0.0]))
    plus_y, _ = flux_basis(desc, TRIANGLE, _to_reference(x + [0.0, step]))
    minus_y, _ = flux_basis(desc, TRIANGLE, _to_reference(x - [0.0, step]))
    approx = (plus_x[0, :, 0] - minus_x[0, :, 0] + plus_y[0, :, 1] - minus_y[0, :, 1]) / (2.0 * step)
    assert np.allclose(divergence[0], approx, rtol=1e-5, atol=1e-5)


def test_lowest_order_normal_flux():
    desc = SpaceDescriptor("RT", 0)
    s, w = edge_quadrature(4)
    for i in range(3):
        a, b = TRIANGLE[(i + 1) % 3], TRIANGLE[(i + 2) % 3]
        tangent = b - a
        normal = np.array([tangent[1], -tangent[0]])
        points = a[None, :] + s[:, None] * tangent[None, :]
        values, _ = flux_basis(desc, TRIANGLE, _to_reference(points))
        fluxes = np.einsum("q,qjc,c->j", w, values, normal)
        assert np.allclose(fluxes, np.eye(3)[i], atol=1e-12)


def test_flux_basis_rejects_scalar_space():
    with pytest.raises(UnsupportedDegree):
        flux_basis(SpaceDescriptor("D", 1), TRIANGLE, np.array([0.2, 0.2]))

import numpy as np
import pytest

from mixfem import SpaceDescriptor, build_dofmap, check_commuting, interpolate_flux, l2_project
from mixfem.spaces import edge_trace_points, evaluate_flux, evaluate_scalar, scalar_trace
from mixfem.utils.quadrature import edge_quadrature, quadrature

FLUX_SPACES = [("RT", 0), ("RT", 1), ("BDM", 1), ("BDM", 2)]


def cubic_field(points):
    x, y = points[:, 0], points[:, 1]
    return np.column_stack([x ** 3 + y ** 2 - x * y, x * y ** 2 - 2.0 * y ** 3 + x])


def cubic_divergence(points):
    x, y = points[:, 0], points[:, 1]
    return 3.0 * x ** 2 - y + 2.0 * x * y - 6.0 * y ** 2


@pytest.mark.parametrize("family,degree", FLUX_SPACES)
def test_commuting_diagram(distorted_mesh, family, degree):
    desc = SpaceDescriptor(family, degree)
    assert check_commuting(distorted_mesh, desc, cubic_field, cubic_divergence) < 1e-10


@pytest.mark.parametrize("family,degree", FLUX_SPACES)
def test_interpolation_reproduces_polynomials(distorted_mesh, family, degree):
    desc = SpaceDescriptor(family, degree)

    def linear(points):
        x, y = points[:, 0], points[:, 1]
        if desc == SpaceDescriptor("RT", 0):
            return np.column_stack([1.0 + 2.0 * x, -0.5 + 2.0 * y])
        return np.column_stack([1.0 + 2.0 * x - y, 0.5 * x + 3.0 * y])

    interpolant = interpolate_flux(distorted_mesh, desc, linear)
    rule = quadrature(3)
    values, _ = evaluate_flux(distorted_mesh, interpolant, rule.ref_points)
    P0 = distorted_mesh.vertices[distorted_mesh.triangles[:, 0]]
    x = P0[:, None, :] + np.einsum("kij,qj->kqi", distorted_mesh.jacobians, rule.ref_points)
    assert np.allclose(values, linear(x.reshape(-1, 2)).reshape(values.shape), atol=1e-11)


@pytest.mark.parametrize("family,degree", FLUX_SPACES)
def test_normal_trace_continuous(distorted_mesh, family, degree):
    """ The interpolant has a single-valued normal component on every interior edge. """
    mesh = distorted_mesh
    interpolant = interpolate_flux(mesh, SpaceDescriptor(family, degree), cubic_field)
    s, _ = edge_quadrature(4)
    traces = []
    for side in (0, 1):
        triangles, ref = edge_trace_points(mesh, mesh.interior_edges, side, s)
        values = np.stack([evaluate_flux(mesh, interpolant, ref[e], triangles[e:e + 1])[0][0]
                           for e in range(len(triangles))])
        traces.append(np.einsum("eqc,ec->eq", values, mesh.edge_normals[mesh.interior_edges]))
    assert np.allclose(traces[0], traces[1], atol=1e-10)


def test_dofmap_numbering(square_mesh):
    dofmap = build_dofmap(square_mesh, SpaceDescriptor("RT", 1))
    assert dofmap.n_global == 2 * square_mesh.n_edges + 2 * square_mesh.n_triangles
    assert dofmap.n_local == 8
    # every edge DOF is owned by exactly one triangle
    owned = dofmap.cell_dofs[dofmap.owner_mask]
    assert len(np.unique(owned)) == len(owned) == dofmap.n_global

    scalar = build_dofmap(square_mesh, SpaceDescriptor("D", 2))
    assert scalar.n_global == 6 * square_mesh.n_triangles


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_l2_projection_reproduces_polynomials(distorted_mesh, k):
    def poly(points):
        x, y = points[:, 0], points[:, 1]
        return 1.0 - x + 2.0 * y + (k >= 2) * x * y + (k >= 3) * y ** 3

    projected = l2_project(distorted_mesh, k, poly)
    rule = quadrature(4)
    values, _ = evaluate_scalar(distorted_mesh, projected, rule.ref_points)
    P0 = distorted_mesh.vertices[distorted_mesh.triangles[:, 0]]
    x = P0[:, None, :] + np.einsum("kij,qj->kqi", distorted_mesh.jacobians, rule.ref_points)
    exact = poly(x.reshape(-1, 2)).reshape(values.shape)
    if k == 0:
        # the constant is the element mean
        means = values[:, 0]
        exact_means = exact.dot(rule.weights) / rule.weights.sum()
        assert np.allclose(means, exact_means, atol=1e-12)
    else:
        assert np.allclose(values, exact, atol=1e-11)


def test_scalar_trace_matches_on_both_sides(square_mesh):
    """ A globally continuous function projected onto D1 has matching traces. """
    projected = l2_project(square_mesh, 1, lambda p: 2.0 * p[:, 0] - p[:, 1] + 0.5)
    s, _ = edge_quadrature(3)
    edges = square_mesh.interior_edges
    assert np.allclose(scalar_trace(square_mesh, projected, edges, 0, s),
                       scalar_trace(square_mesh, projected, edges, 1, s), atol=1e-12)

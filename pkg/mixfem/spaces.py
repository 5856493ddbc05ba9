from __future__ import absolute_import, division, print_function

import logging

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .elements import (
    DEFAULT_QUAD_EXCESS,
    SpaceDescriptor,
    _moments_batch,
    piola_map,
    reference_flux_basis,
    scalar_basis,
    scalar_gram,
)
from .utils.quadrature import REFERENCE_VERTICES, quadrature, corner_graded_rule

logger = logging.getLogger(__name__)


class DofMap(object):
    """
    Global numbering of a flux or discontinuous scalar space.

    Flux spaces number edge DOFs first (edge e owns e*n_edge .. e*n_edge + n_edge - 1, Legendre moment order in
    the global edge direction) and interior DOFs after all edges. `cell_signs` converts local (outward normal,
    local edge direction) DOFs into global ones.
    """

    def __init__(self, mesh, space):
        self.space = space
        self.n_triangles = mesh.n_triangles
        nt = mesh.n_triangles
        if space.is_flux:
            ne = space.n_edge_dofs
            ni = space.n_interior_dofs
            j = np.arange(ne)
            edge_dofs = (mesh.triangle_to_edges[:, :, None] * ne + j[None, None, :]).reshape(nt, 3 * ne)
            interior = mesh.n_edges * ne + np.arange(nt)[:, None] * ni + np.arange(ni)[None, :]
            parity = np.where(mesh.edge_reversed[:, :, None] & (j % 2 == 1)[None, None, :], -1.0, 1.0)
            edge_signs = (mesh.triangle_edge_signs[:, :, None] * parity).reshape(nt, 3 * ne)
            self.cell_dofs = np.hstack([edge_dofs, interior]).astype(np.int64)
            self.cell_signs = np.hstack([edge_signs, np.ones((nt, ni))])
            self.n_global = mesh.n_edges * ne + nt * ni
            # edge DOFs are written by the lower-indexed incident triangle only
            owner = np.repeat(mesh.triangle_edge_signs > 0, ne, axis=1)
            self.owner_mask = np.hstack([owner, np.ones((nt, ni), dtype=bool)])
        else:
            dim = space.dim
            self.cell_dofs = np.arange(nt * dim, dtype=np.int64).reshape(nt, dim)
            self.cell_signs = np.ones((nt, dim))
            self.n_global = nt * dim
            self.owner_mask = np.ones((nt, dim), dtype=bool)
        for array in (self.cell_dofs, self.cell_signs, self.owner_mask):
            array.setflags(write=False)

    @property
    def n_local(self):
        return self.cell_dofs.shape[1]

    def __repr__(self):
        return "DofMap({}, n_global={})".format(self.space, self.n_global)


def build_dofmap(mesh, desc):
    return DofMap(mesh, desc)


class FieldVector(object):
    """ Coefficient vector of a discrete field together with its DofMap. """

    def __init__(self, dofmap, coefficients):
        coefficients = np.asarray(coefficients, dtype=float).reshape(-1)
        if len(coefficients) != dofmap.n_global:
            raise ValueError("Expected {} coefficients for {}, got {}".format(
                dofmap.n_global, dofmap.space, len(coefficients)))
        self.dofmap = dofmap
        self.coefficients = coefficients

    @property
    def space(self):
        return self.dofmap.space

    def local(self, triangles=None):
        """ Per-triangle coefficients in the local orientation, shape (nt, n_local). """
        dofs = self.dofmap.cell_dofs
        signs = self.dofmap.cell_signs
        if triangles is not None:
            dofs, signs = dofs[triangles], signs[triangles]
        return self.coefficients[dofs] * signs

    def __repr__(self):
        return "FieldVector({}, n={})".format(self.space, len(self.coefficients))


# ----------------------------------------------------------------------
# evaluation

def physical_points(mesh, ref_points, triangles=None):
    P0 = mesh.vertices[mesh.triangles[:, 0]]
    J = mesh.jacobians
    if triangles is not None:
        P0, J = P0[triangles], J[triangles]
    return P0[:, None, :] + np.einsum("kij,qj->kqi", J, ref_points)


def flux_basis_on_mesh(mesh, dofmap, ref_points, triangles=None):
    """ Globally oriented physical flux basis, values (nt, n, nb, 2) and divergences (nt, n, nb). """
    ref_values, ref_div = reference_flux_basis(dofmap.space, ref_points)
    J, det, signs = mesh.jacobians, mesh.det, dofmap.cell_signs
    if triangles is not None:
        J, det, signs = J[triangles], det[triangles], signs[triangles]
    return piola_map(J, det, ref_values, ref_div, signs)


def scalar_basis_on_mesh(mesh, degree, ref_points, triangles=None):
    """ Scalar basis values (n, dim) and physical gradients (nt, n, dim, 2). """
    values, ref_grads = scalar_basis(degree, ref_points)
    J = mesh.jacobians if triangles is None else mesh.jacobians[triangles]
    inv_t = np.linalg.inv(J).transpose(0, 2, 1)
    return values, np.einsum("kij,qbj->kqbi", inv_t, ref_grads)


def evaluate_flux(mesh, field, ref_points, triangles=None):
    """ Values (nt, n, 2) and divergences (nt, n) of a discrete flux at reference points of each triangle. """
    values, divergence = flux_basis_on_mesh(mesh, field.dofmap, ref_points, triangles)
    coefficients = field.coefficients[field.dofmap.cell_dofs if triangles is None
                                      else field.dofmap.cell_dofs[triangles]]
    return np.einsum("kqbi,kb->kqi", values, coefficients), np.einsum("kqb,kb->kq", divergence, coefficients)


def evaluate_scalar(mesh, field, ref_points, triangles=None):
    """ Values (nt, n) and physical gradients (nt, n, 2) of a discrete scalar field. """
    values, gradients = scalar_basis_on_mesh(mesh, field.space.degree, ref_points, triangles)
    coefficients = field.local(triangles)
    return coefficients.dot(values.T), np.einsum("kqbi,kb->kqi", gradients, coefficients)


def singular_corners(mesh, singular_points):
    """ Per triangle, the local vertex sitting on a singular point, or -1. """
    corners = np.full(mesh.n_triangles, -1, dtype=np.int64)
    if not singular_points:
        return corners
    scale = max(1.0, float(np.abs(mesh.vertices).max()))
    for point in singular_points:
        hit = np.linalg.norm(mesh.vertices - np.asarray(point, dtype=float), axis=1) <= 1e-12 * scale
        on_vertex = hit[mesh.triangles]
        touching = on_vertex.any(axis=1)
        corners[touching] = np.argmax(on_vertex[touching], axis=1)
    return corners


def element_rule_groups(mesh, order, singular_points=(), depth=6):
    """
    Split the triangles into groups sharing one reference rule: plain `order` rule for regular triangles,
    corner-graded composite rules for triangles with a vertex on a singular point.

    Returns a list of (triangle indices, reference points, weights).
    """
    corners = singular_corners(mesh, singular_points)
    rule = quadrature(int(min(20, max(1, order))))
    groups = []
    regular = np.flatnonzero(corners < 0)
    if len(regular):
        groups.append((regular, rule.ref_points, rule.weights))
    for c in range(3):
        idx = np.flatnonzero(corners == c)
        if len(idx):
            pts, wts = corner_graded_rule(rule.order, c, depth)
            groups.append((idx, pts, wts))
    return groups


# ----------------------------------------------------------------------
# interpolation and projection

def interpolate_flux(mesh, desc, analytic_field, quad_excess=DEFAULT_QUAD_EXCESS, singular_points=(), depth=4):
    """
    Canonical interpolant I_h of a vector field into RT_k / BDM_k.

    Parameters
    ----------
    analytic_field : callable
        Maps points (n, 2) to values (n, 2).
    quad_excess : int
        Extra quadrature orders for non-polynomial fields.
    singular_points : sequence
        Points where the field is singular; moments on triangles touching them use dyadic quadrature.
    depth : int
        Dyadic levels for those triangles.
    """
    dofmap = build_dofmap(mesh, desc)
    P = mesh.vertices[mesh.triangles]
    corners = singular_corners(mesh, singular_points)
    moments = np.zeros((mesh.n_triangles, dofmap.n_local))
    for c in np.unique(corners):
        idx = np.flatnonzero(corners == c)
        moments[idx] = _moments_batch(desc, P[idx], analytic_field, quad_excess, int(c), depth)

    coefficients = np.zeros(dofmap.n_global)
    mask = dofmap.owner_mask
    coefficients[dofmap.cell_dofs[mask]] = (moments * dofmap.cell_signs)[mask]
    return FieldVector(dofmap, coefficients)


def l2_project(mesh, k, scalar_callable, order=None, singular_points=(), depth=6):
    """
    Element-wise L2 projection Q_h^k onto discontinuous P_k, by a Gram solve of the hierarchical basis.

    Parameters
    ----------
    k : int
        Target degree.
    scalar_callable : callable
        Maps points (n, 2) to values (n,).
    order : int, optional
        Quadrature order, default 2k + 4.
    """
    desc = SpaceDescriptor("D", k)
    dofmap = build_dofmap(mesh, desc)
    if order is None:
        order = 2 * k + 4
    gram = cho_factor(scalar_gram(k))

    rhs = np.zeros((mesh.n_triangles, desc.dim))
    for idx, pts, wts in element_rule_groups(mesh, order, singular_points, depth):
        values = np.asarray(scalar_callable(physical_points(mesh, pts, idx).reshape(-1, 2)), dtype=float)
        values = values.reshape(len(idx), len(wts))
        basis, _ = scalar_basis(k, pts)
        rhs[idx] = np.einsum("q,kq,qi->ki", wts, values, basis)
    coefficients = cho_solve(gram, rhs.T).T
    return FieldVector(dofmap, coefficients.reshape(-1))


def check_commuting(mesh, desc, analytic_field, field_divergence, quad_excess=DEFAULT_QUAD_EXCESS):
    """
    Max over quadrature points of |div(I_h tau) - Q_h div(tau)|, with Q_h onto P_k (RT_k) or P_{k-1} (BDM_k).
    """
    interpolant = interpolate_flux(mesh, desc, analytic_field, quad_excess=quad_excess)
    m = desc.div_degree
    projected = l2_project(mesh, m, field_divergence, order=min(20, 2 * m + 4 + quad_excess))

    rule = quadrature(max(1, 2 * desc.poly_degree))
    _, divergence = evaluate_flux(mesh, interpolant, rule.ref_points)
    values, _ = evaluate_scalar(mesh, projected, rule.ref_points)
    defect = float(np.max(np.abs(divergence - values)))
    logger.debug("Commuting defect for %s on %r: %.3e", desc, mesh, defect)
    return defect


def edge_reference_points(i, s):
    """ Reference coordinates of parameters `s` along local edge i (vertex i+1 -> vertex i+2). """
    a = REFERENCE_VERTICES[(i + 1) % 3]
    b = REFERENCE_VERTICES[(i + 2) % 3]
    return a[None, :] + np.asarray(s)[:, None] * (b - a)[None, :]


def edge_outward_normals(mesh, triangles, i):
    """ Outward normals scaled by the edge length, for local edge i of the given triangles. """
    P = mesh.vertices[mesh.triangles[triangles]]
    tangent = P[:, (i + 2) % 3] - P[:, (i + 1) % 3]
    return np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)


def edge_trace_points(mesh, edges, side, s):
    """
    Reference points on the triangle at `side` (0 owner, 1 neighbour) of each edge, at parameters `s` measured
    from the lower to the higher global vertex of the edge, so both sides see the same physical points.

    Returns
    -------
    triangles : ndarray
        (ne,) triangle indices.
    ref_points : ndarray
        (ne, nq, 2) reference coordinates.
    """
    s = np.asarray(s, dtype=float)
    triangles = mesh.edge_to_triangles[edges, side]
    local = mesh.edge_local_index[edges, side]
    reversed_ = mesh.edge_reversed[triangles, local]
    t = np.where(reversed_[:, None], 1.0 - s[None, :], s[None, :])
    a = REFERENCE_VERTICES[(local + 1) % 3]
    b = REFERENCE_VERTICES[(local + 2) % 3]
    return triangles, a[:, None, :] + t[:, :, None] * (b - a)[:, None, :]


def edge_points(mesh, edges, s):
    """ Physical points (ne, nq, 2) at parameters `s` from the lower to the higher global vertex. """
    a = mesh.vertices[mesh.edges[edges, 0]]
    b = mesh.vertices[mesh.edges[edges, 1]]
    return a[:, None, :] + np.asarray(s)[None, :, None] * (b - a)[:, None, :]


def scalar_trace(mesh, field, edges, side, s):
    """ Values (ne, nq) of a discrete scalar field on one side of the given edges. """
    triangles, ref = edge_trace_points(mesh, edges, side, s)
    values, _ = scalar_basis(field.space.degree, ref.reshape(-1, 2))
    values = values.reshape(ref.shape[0], ref.shape[1], -1)
    return np.einsum("kqb,kb->kq", values, field.local(triangles))

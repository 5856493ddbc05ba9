from __future__ import absolute_import, division, print_function

import logging

import numpy as np

from .elements import SpaceDescriptor, scalar_basis
from .exceptions import LocalSingularSystem
from .spaces import (
    FieldVector,
    build_dofmap,
    edge_outward_normals,
    edge_reference_points,
    element_rule_groups,
    evaluate_flux,
    evaluate_scalar,
    physical_points,
    scalar_basis_on_mesh,
)
from .utils.quadrature import quadrature, edge_quadrature

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e14


class PostField(FieldVector):
    """ Element-wise post-processed potential u* in discontinuous P_{k+1}. """

    @property
    def degree(self):
        return self.space.degree

    @property
    def blocks(self):
        """ Per-triangle coefficient blocks, shape (nt, dim P_{k+1}). """
        return self.coefficients.reshape(self.dofmap.n_triangles, -1)


def _gradient_gram(mesh, degree):
    rule = quadrature(max(1, 2 * (degree - 1)))
    _, gradients = scalar_basis_on_mesh(mesh, degree, rule.ref_points)
    return np.einsum("q,kqia,kqja->kij", rule.weights, gradients, gradients) * mesh.det[:, None, None]


def _boundary_flux_moments(mesh, sigma_h, degree):
    """ int_{dK} (sigma_h . n) p_i for every triangle, from its own (single-valued) normal trace. """
    s, w = edge_quadrature(sigma_h.space.poly_degree + degree + 1)
    out = np.zeros((mesh.n_triangles, SpaceDescriptor("D", degree).dim))
    everything = np.arange(mesh.n_triangles)
    for i in range(3):
        ref = edge_reference_points(i, s)
        values, _ = evaluate_flux(mesh, sigma_h, ref)
        normal = edge_outward_normals(mesh, everything, i)
        trace = np.einsum("kqc,kc->kq", values, normal)
        p, _ = scalar_basis(degree, ref)
        out += np.einsum("q,kq,qi->ki", w, trace, p)
    return out


def stenberg_postprocess(mesh, coeff, sigma_h, u_h, flux_index_k, f, singular_points=(), depth=6):
    """
    Local post-processing of a mixed solution into u* in P_{k+1}(K) on every triangle:

        (alpha grad u*, grad v)_K = (f, v)_K - (sigma_h . n, v)_{dK}   for all v in P_{k+1}(K) / R
        int_K u* = int_K u_h

    solved as one augmented system per triangle, the mean constraint entering through a Lagrange multiplier.

    Parameters
    ----------
    sigma_h : FieldVector
        Discrete flux in RT_k or BDM_k.
    u_h : FieldVector
        Discrete potential.
    flux_index_k : int or None
        Polynomial index k of the flux space (RT_k or BDM_k); u* lives in P_{k+1}. Must equal the degree of
        `sigma_h`'s space, otherwise ValueError. None takes it from `sigma_h`.
    f : callable
        Load, maps points (n, 2) to values (n,).

    Returns
    -------
    PostField
    """
    k = sigma_h.space.degree if flux_index_k is None else int(flux_index_k)
    if k != sigma_h.space.degree:
        raise ValueError("flux_index_k={} does not match the flux space {}".format(k, sigma_h.space))
    degree = k + 1
    desc = SpaceDescriptor("D", degree)
    dim = desc.dim
    nt = mesh.n_triangles
    alpha = coeff.alpha_by_triangle

    gram = _gradient_gram(mesh, degree)

    load = np.zeros((nt, dim))
    for idx, pts, wts in element_rule_groups(mesh, 2 * degree + 4, singular_points, depth):
        values = np.asarray(f(physical_points(mesh, pts, idx).reshape(-1, 2)), dtype=float)
        values = values.reshape(len(idx), len(wts))
        p, _ = scalar_basis(degree, pts)
        load[idx] = np.einsum("q,kq,qi->ki", wts, values, p) * mesh.det[idx, None]
    rhs = load - _boundary_flux_moments(mesh, sigma_h, degree)

    rule = quadrature(max(1, degree + u_h.space.degree))
    p, _ = scalar_basis(degree, rule.ref_points)
    reference_means = rule.weights.dot(p)
    u_values, _ = evaluate_scalar(mesh, u_h, rule.ref_points)
    u_means = u_values.dot(rule.weights)

    # rows divided by alpha_K; the gram carries |det J|, so the augmented matrix is O(1) for any alpha and h
    system = np.zeros((nt, dim + 1, dim + 1))
    system[:, :dim, :dim] = gram
    system[:, :dim, dim] = reference_means[None, :]
    system[:, dim, :dim] = reference_means[None, :]
    right = np.zeros((nt, dim + 1))
    right[:, :dim] = rhs / alpha[:, None]
    right[:, dim] = u_means

    condition = np.linalg.cond(system)
    if not np.all(np.isfinite(condition)) or np.any(condition > MAX_CONDITION):
        worst = int(np.nanargmax(np.where(np.isfinite(condition), condition, np.inf)))
        raise LocalSingularSystem("Local post-processing system on triangle {} is singular (cond={:.2e})".format(
            worst, condition[worst]))
    try:
        solution = np.linalg.solve(system, right[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as err:
        raise LocalSingularSystem("Local post-processing solve failed: {}".format(err)) from err

    dofmap = build_dofmap(mesh, desc)
    field = PostField(dofmap, solution[:, :dim].reshape(-1))
    logger.debug("Post-processed potential in D%s, max local condition %.2e", degree, condition.max())
    return field


def mean_defect(mesh, u_star, u_h):
    """ Per triangle |int_K (u* - u_h)|. """
    rule = quadrature(max(1, u_star.space.degree + u_h.space.degree))
    a, _ = evaluate_scalar(mesh, u_star, rule.ref_points)
    b, _ = evaluate_scalar(mesh, u_h, rule.ref_points)
    return np.abs((a - b).dot(rule.weights)) * mesh.det

from __future__ import absolute_import, division, print_function

import logging
import os

import numpy as np
import scipy.sparse as sp
from scipy.io import mmwrite

from .elements import SpaceDescriptor, scalar_basis
from .exceptions import UnstablePair
from .spaces import (
    build_dofmap,
    element_rule_groups,
    edge_outward_normals,
    edge_reference_points,
    flux_basis_on_mesh,
    physical_points,
)
from .utils.quadrature import quadrature, edge_quadrature
from .utils.tools import create_missing_folders

logger = logging.getLogger(__name__)


def check_stable_pair(flux_desc, pot_degree):
    """ RT_k x D_k and BDM_k x D_{k-1} are the supported stable pairs. """
    if not flux_desc.is_flux:
        raise UnstablePair("{} is not a flux space".format(flux_desc))
    if pot_degree != flux_desc.div_degree:
        raise UnstablePair(
            "{} x D{} is not a stable pair; use {} x D{}".format(
                flux_desc, pot_degree, flux_desc, flux_desc.div_degree
            )
        )


def _coo(rows, cols, values, shape):
    """ Triplets sorted by (row, col) so duplicate summation happens in a fixed order. """
    rows, cols, values = rows.ravel(), cols.ravel(), values.ravel()
    order = np.lexsort((cols, rows))
    return sp.coo_matrix((values[order], (rows[order], cols[order])), shape=shape)


class SaddleSystem(object):
    """
    Discrete mixed system

        A sigma - B^T u = F_flux
        B sigma         = F_pot

    with A the alpha^{-1} weighted flux mass matrix and B the divergence coupling (div tau, v). A and B are kept as
    COO triplets; the solver converts them.
    """

    def __init__(self, mesh, coeff, flux_dofmap, pot_dofmap, A, B, F_flux, F_pot):
        self.mesh = mesh
        self.coeff = coeff
        self.flux_dofmap = flux_dofmap
        self.pot_dofmap = pot_dofmap
        self.A = A
        self.B = B
        self.F_flux = F_flux
        self.F_pot = F_pot

    @property
    def n_flux(self):
        return self.flux_dofmap.n_global

    @property
    def n_pot(self):
        return self.pot_dofmap.n_global

    def __repr__(self):
        return "SaddleSystem({} x D{}, n_flux={}, n_pot={})".format(
            self.flux_dofmap.space, self.pot_dofmap.space.degree, self.n_flux, self.n_pot
        )


def assemble_matrices(mesh, coeff, flux_desc, pot_degree):
    """
    Assemble the flux mass matrix A (alpha_K^{-1} phi_i . phi_j) and the coupling B ((div phi_j) psi_i).

    Returns
    -------
    A, B : scipy.sparse.coo_matrix
    flux_dofmap, pot_dofmap : DofMap
    """
    check_stable_pair(flux_desc, pot_degree)
    flux_dofmap = build_dofmap(mesh, flux_desc)
    pot_desc = SpaceDescriptor("D", pot_degree)
    pot_dofmap = build_dofmap(mesh, pot_desc)

    rule = quadrature(max(1, 2 * flux_desc.poly_degree))
    values, _ = flux_basis_on_mesh(mesh, flux_dofmap, rule.ref_points)
    scale = mesh.det / coeff.alpha_by_triangle
    A_local = np.einsum("q,kqia,kqja->kij", rule.weights, values, values) * scale[:, None, None]
    fd = flux_dofmap.cell_dofs
    nb = fd.shape[1]
    A = _coo(
        np.broadcast_to(fd[:, :, None], A_local.shape),
        np.broadcast_to(fd[:, None, :], A_local.shape),
        A_local,
        (flux_dofmap.n_global, flux_dofmap.n_global),
    )

    rule = quadrature(max(1, flux_desc.div_degree + pot_degree))
    _, divergence = flux_basis_on_mesh(mesh, flux_dofmap, rule.ref_points)
    psi, _ = scalar_basis(pot_degree, rule.ref_points)
    B_local = np.einsum("q,kqj,qi->kij", rule.weights, divergence, psi) * mesh.det[:, None, None]
    pd = pot_dofmap.cell_dofs
    B = _coo(
        np.broadcast_to(pd[:, :, None], B_local.shape),
        np.broadcast_to(fd[:, None, :], B_local.shape),
        B_local,
        (pot_dofmap.n_global, flux_dofmap.n_global),
    )
    logger.debug("Assembled A (%s x %s, %s local blocks of %s) and B (%s x %s)", A.shape[0], A.shape[1],
                 mesh.n_triangles, nb, B.shape[0], B.shape[1])
    return A, B, flux_dofmap, pot_dofmap


def potential_load(mesh, pot_dofmap, f, singular_points=(), depth=6):
    """ (f, psi_i) for the discontinuous potential basis, quadrature order 2k + 4. """
    k = pot_dofmap.space.degree
    F = np.zeros(pot_dofmap.n_global)
    for idx, pts, wts in element_rule_groups(mesh, 2 * k + 4, singular_points, depth):
        values = np.asarray(f(physical_points(mesh, pts, idx).reshape(-1, 2)), dtype=float)
        values = values.reshape(len(idx), len(wts))
        psi, _ = scalar_basis(k, pts)
        local = np.einsum("q,kq,qi->ki", wts, values, psi) * mesh.det[idx, None]
        F[pot_dofmap.cell_dofs[idx]] = local
    return F


def dirichlet_load(mesh, flux_dofmap, g):
    """ -<g, phi_i . n> over the Dirichlet edges. """
    desc = flux_dofmap.space
    F = np.zeros(flux_dofmap.n_global)
    s, w = edge_quadrature(2 * desc.poly_degree + 4)
    boundary = mesh.dirichlet_edges
    owners = mesh.edge_to_triangles[boundary, 0]
    local_edge = mesh.edge_local_index[boundary, 0]
    for i in range(3):
        tri = owners[local_edge == i]
        if len(tri) == 0:
            continue
        ref = edge_reference_points(i, s)
        values, _ = flux_basis_on_mesh(mesh, flux_dofmap, ref, tri)
        normal = edge_outward_normals(mesh, tri, i)
        x = physical_points(mesh, ref, tri)
        data = np.asarray(g(x.reshape(-1, 2)), dtype=float).reshape(len(tri), len(s))
        local = -np.einsum("q,kq,kqbc,kc->kb", w, data, values, normal)
        np.add.at(F, flux_dofmap.cell_dofs[tri], local)
    return F


def assemble_system(mesh, coeff, flux_desc, pot_degree, f, g, singular_points=(), depth=6):
    """
    Assemble the mixed saddle-point system for -div(alpha grad u) = f, u = g on the boundary.

    Parameters
    ----------
    flux_desc : SpaceDescriptor
        RT_k or BDM_k.
    pot_degree : int
        k for RT_k, k - 1 for BDM_k.
    f, g : callable
        Load and Dirichlet data, mapping points (n, 2) to values (n,).

    Returns
    -------
    SaddleSystem
    """
    A, B, flux_dofmap, pot_dofmap = assemble_matrices(mesh, coeff, flux_desc, pot_degree)
    F_pot = potential_load(mesh, pot_dofmap, f, singular_points, depth)
    F_flux = dirichlet_load(mesh, flux_dofmap, g)
    system = SaddleSystem(mesh, coeff, flux_dofmap, pot_dofmap, A, B, F_flux, F_pot)
    logger.info("Assembled %r", system)
    return system


def dump_matrix_market(system, folder):
    """ Write A and B in Matrix Market format for debugging. """
    create_missing_folders([folder])
    mmwrite(os.path.join(folder, "A.mtx"), system.A.tocsr())
    mmwrite(os.path.join(folder, "B.mtx"), system.B.tocsr())
    logger.info("  Matrices dumped to:     %s", folder)

from __future__ import absolute_import, division, print_function

import logging
import os

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.linalg import eigh, LinAlgError
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, cg, eigsh, splu

from .assembly import assemble_matrices
from .coefficients import build_coefficient
from .exceptions import EigenSolveFailure
from .spaces import (
    edge_trace_points,
    flux_basis_on_mesh,
    scalar_basis_on_mesh,
)
from .elements import scalar_basis
from .utils.quadrature import edge_quadrature, quadrature
from .utils.tools import create_missing_folders

logger = logging.getLogger(__name__)

DENSE_LIMIT = 2000
DUAL_DENSE_LIMIT = 5000
EIGEN_TOL = 1e-8
SWEEP_COLUMNS = ["level", "n_flux", "n_pot", "alpha_ratio", "beta", "C_equiv"]


class SpectralReport(object):
    """ Inf-sup and norm-equivalence constants measured on one (mesh, coefficient, space) triple. """

    def __init__(self, beta, C_equiv, continuity=None, level=None, alpha_ratio=None, n_flux=None, n_pot=None):
        self.beta = beta
        self.C_equiv = C_equiv
        self.continuity = continuity
        self.level = level
        self.alpha_ratio = alpha_ratio
        self.n_flux = n_flux
        self.n_pot = n_pot

    def as_dict(self):
        return {
            "level": self.level,
            "n_flux": self.n_flux,
            "n_pot": self.n_pot,
            "alpha_ratio": self.alpha_ratio,
            "beta": self.beta,
            "C_equiv": self.C_equiv,
            "continuity": self.continuity,
        }

    def __repr__(self):
        return "SpectralReport(beta={:.4f}, C_equiv={:.4f})".format(self.beta, self.C_equiv)


def _block_coo(rows, cols, blocks, n):
    return sp.coo_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()


def _scatter(dofs_a, dofs_b, blocks, n):
    rows = np.broadcast_to(dofs_a[:, :, None], blocks.shape)
    cols = np.broadcast_to(dofs_b[:, None, :], blocks.shape)
    return _block_coo(rows, cols, blocks, n)


def potential_gram(mesh, coeff, pot_dofmap):
    """
    Gram matrix N of |||.|||_{alpha,h} on D_k: alpha_K (grad psi_i, grad psi_j)_K, plus
    (alpha_{F,H}/h_F)([psi_i], [psi_j])_F on interior edges and (alpha_F/h_F)(psi_i, psi_j)_F on Dirichlet edges.
    """
    k = pot_dofmap.space.degree
    n = pot_dofmap.n_global
    dofs = pot_dofmap.cell_dofs

    N = sp.csr_matrix((n, n))
    if k > 0:
        rule = quadrature(max(1, 2 * (k - 1)))
        _, gradients = scalar_basis_on_mesh(mesh, k, rule.ref_points)
        volume = np.einsum("q,kqia,kqja->kij", rule.weights, gradients, gradients)
        volume *= (mesh.det * coeff.alpha_by_triangle)[:, None, None]
        N = N + _scatter(dofs, dofs, volume, n)

    s, w = edge_quadrature(2 * k + 1)

    def traces(edges, side):
        triangles, ref = edge_trace_points(mesh, edges, side, s)
        values, _ = scalar_basis(k, ref.reshape(-1, 2))
        return triangles, values.reshape(len(edges), len(s), -1)

    interior = mesh.interior_edges
    if len(interior):
        weight = coeff.alpha_harmonic_by_edge[interior][:, None, None]
        t0, v0 = traces(interior, 0)
        t1, v1 = traces(interior, 1)
        for (ta, va, sa) in ((t0, v0, 1.0), (t1, v1, -1.0)):
            for (tb, vb, sb) in ((t0, v0, 1.0), (t1, v1, -1.0)):
                block = sa * sb * weight * np.einsum("q,kqi,kqj->kij", w, va, vb)
                N = N + _scatter(dofs[ta], dofs[tb], block, n)

    boundary = mesh.dirichlet_edges
    if len(boundary):
        weight = coeff.alpha_harmonic_by_edge[boundary][:, None, None]
        tb, vb = traces(boundary, 0)
        N = N + _scatter(dofs[tb], dofs[tb], weight * np.einsum("q,kqi,kqj->kij", w, vb, vb), n)
    return N.tocsr()


def flux_edge_gram(mesh, coeff, flux_dofmap):
    """ Gram matrix E of sum_F (h_F/alpha_{F,H}) (phi_i . n, phi_j . n)_F, from the owner triangle's traces. """
    desc = flux_dofmap.space
    n = flux_dofmap.n_global
    s, w = edge_quadrature(2 * desc.poly_degree + 1)
    edges = np.arange(mesh.n_edges)
    triangles, ref = edge_trace_points(mesh, edges, 0, s)
    local = mesh.edge_local_index[:, 0]
    E = sp.csr_matrix((n, n))
    for i in range(3):
        sel = np.flatnonzero(local == i)
        for rev in (False, True):
            group = sel[mesh.edge_reversed[triangles[sel], i] == rev]
            if len(group) == 0:
                continue
            tri = triangles[group]
            values, _ = flux_basis_on_mesh(mesh, flux_dofmap, ref[group[0]], tri)
            trace = np.einsum("kqbc,kc->kqb", values, mesh.edge_normals[group])
            weight = (mesh.h_F[group] ** 2 / coeff.alpha_harmonic_by_edge[group])[:, None, None]
            block = weight * np.einsum("q,kqi,kqj->kij", w, trace, trace)
            dofs = flux_dofmap.cell_dofs[tri]
            E = E + _scatter(dofs, dofs, block, n)
    return E.tocsr()


def _operators(mesh, coeff, flux_desc, pot_degree):
    A, B, flux_dofmap, pot_dofmap = assemble_matrices(mesh, coeff, flux_desc, pot_degree)
    return A.tocsr(), B.tocsr(), flux_dofmap, pot_dofmap


def _schur_pencil(M, B, N):
    """ Generalized eigenvalues of (B M^{-1} B^T, N), ascending. Dense below DENSE_LIMIT potential DOFs. """
    n_pot = B.shape[0]
    try:
        lu = splu(M.tocsc())
    except RuntimeError as err:
        raise EigenSolveFailure("Factorization of the flux mass matrix failed: {}".format(err)) from err

    if n_pot < DENSE_LIMIT:
        S = B.dot(lu.solve(B.T.toarray()))
        S = 0.5 * (S + S.T)
        try:
            return eigh(S, N.toarray(), eigvals_only=True)
        except (LinAlgError, ValueError) as err:
            raise EigenSolveFailure("Dense generalized eigensolve failed: {}".format(err)) from err

    def schur(x):
        return B.dot(lu.solve(B.T.dot(x)))

    S = LinearOperator((n_pot, n_pot), matvec=schur, dtype=float)

    def inverse(x):
        y, info = cg(S, x, rtol=EIGEN_TOL * 1e-2, atol=0.0, maxiter=10 * n_pot)
        if info != 0:
            raise EigenSolveFailure("CG inside shift-invert did not converge (info={})".format(info))
        return y

    OPinv = LinearOperator((n_pot, n_pot), matvec=inverse, dtype=float)
    try:
        N_lu = splu(N.tocsc())
    except RuntimeError as err:
        raise EigenSolveFailure("Factorization of the potential Gram matrix failed: {}".format(err)) from err
    Minv = LinearOperator((n_pot, n_pot), matvec=N_lu.solve, dtype=float)
    try:
        low = eigsh(S, k=1, M=N, sigma=0.0, which="LM", OPinv=OPinv, tol=EIGEN_TOL, return_eigenvectors=False)
        high = eigsh(S, k=1, M=N, Minv=Minv, which="LA", tol=EIGEN_TOL, return_eigenvectors=False)
    except (ArpackError, ArpackNoConvergence) as err:
        raise EigenSolveFailure("Iterative eigensolve failed: {}".format(err)) from err
    return np.array([float(low[0]), float(high[0])])


def _pencil_extremes(mesh, coeff, flux_desc, pot_degree):
    M, B, _, pot_dofmap = _operators(mesh, coeff, flux_desc, pot_degree)
    N = potential_gram(mesh, coeff, pot_dofmap)
    eigenvalues = _schur_pencil(M, B, N)
    low, high = float(eigenvalues[0]), float(eigenvalues[-1])
    if not low > 0:
        raise EigenSolveFailure("Smallest eigenvalue of the inf-sup pencil is not positive ({:.3e})".format(low))
    return low, high, M.shape[0], B.shape[0]


def infsup_constant(mesh, coeff, flux_desc, pot_degree):
    """
    Discrete inf-sup constant

        beta = min_v sup_tau (div tau, v) / (||alpha^{-1/2} tau||_0 |||v|||_{alpha,h}),

    the square root of the smallest generalized eigenvalue of (B M^{-1} B^T) x = lambda N x.
    """
    low, _, _, _ = _pencil_extremes(mesh, coeff, flux_desc, pot_degree)
    beta = float(np.sqrt(low))
    logger.debug("Inf-sup constant of %s x D%s on %r: %.6f", flux_desc, pot_degree, mesh, beta)
    return beta


def continuity_constant(mesh, coeff, flux_desc, pot_degree):
    """ Continuity constant of the divergence coupling, the square root of the largest eigenvalue of the pencil. """
    _, high, _, _ = _pencil_extremes(mesh, coeff, flux_desc, pot_degree)
    return float(np.sqrt(high))


def infsup_constant_dual(mesh, coeff, flux_desc, pot_degree):
    """
    Inf-sup constant from the flux side: on the M-orthogonal complement of the divergence-free fluxes,
    min_tau sup_v (div tau, v) / (|||v|||_{alpha,h} ||alpha^{-1/2} tau||_0), i.e. the square root of the smallest
    of the n_pot largest eigenvalues of (B^T N^{-1} B) x = lambda M x. Dense; meant as a cross-check on small
    instances.
    """
    M, B, _, pot_dofmap = _operators(mesh, coeff, flux_desc, pot_degree)
    n_flux, n_pot = M.shape[0], B.shape[0]
    if n_flux > DUAL_DENSE_LIMIT:
        raise ValueError("infsup_constant_dual is dense; {} flux DOFs exceed {}".format(n_flux, DUAL_DENSE_LIMIT))
    N = potential_gram(mesh, coeff, pot_dofmap)
    try:
        N_lu = splu(N.tocsc())
    except RuntimeError as err:
        raise EigenSolveFailure("Factorization of the potential Gram matrix failed: {}".format(err)) from err
    K = B.T.dot(N_lu.solve(B.toarray()))
    K = 0.5 * (K + K.T)
    try:
        eigenvalues = eigh(K, M.toarray(), eigvals_only=True, subset_by_index=[n_flux - n_pot, n_flux - 1])
    except (LinAlgError, ValueError) as err:
        raise EigenSolveFailure("Dense generalized eigensolve failed: {}".format(err)) from err
    if not eigenvalues[0] > 0:
        raise EigenSolveFailure("Dual pencil has a non-positive eigenvalue ({:.3e})".format(eigenvalues[0]))
    return float(np.sqrt(eigenvalues[0]))


def norm_equivalence_constant(mesh, coeff, flux_desc):
    """
    Smallest C with ||tau_h||_{alpha,h} <= C ||alpha^{-1/2} tau_h||_0 on the flux space: the square root of the
    largest generalized eigenvalue of G x = lambda M x, G = M + E the Gram matrix of ||.||_{alpha,h}^2.
    """
    A, _, flux_dofmap, _ = _operators(mesh, coeff, flux_desc, flux_desc.div_degree)
    E = flux_edge_gram(mesh, coeff, flux_dofmap)
    G = A + E
    n_flux = A.shape[0]
    if n_flux < DENSE_LIMIT:
        try:
            high = eigh(G.toarray(), A.toarray(), eigvals_only=True, subset_by_index=[n_flux - 1, n_flux - 1])[0]
        except (LinAlgError, ValueError) as err:
            raise EigenSolveFailure("Dense generalized eigensolve failed: {}".format(err)) from err
    else:
        try:
            A_lu = splu(A.tocsc())
        except RuntimeError as err:
            raise EigenSolveFailure("Factorization of the flux mass matrix failed: {}".format(err)) from err
        Minv = LinearOperator((n_flux, n_flux), matvec=A_lu.solve, dtype=float)
        try:
            high = eigsh(G, k=1, M=A, Minv=Minv, which="LA", tol=EIGEN_TOL, return_eigenvectors=False)[0]
        except (ArpackError, ArpackNoConvergence) as err:
            raise EigenSolveFailure("Iterative eigensolve failed: {}".format(err)) from err
    C = float(np.sqrt(max(high, 1.0)))
    logger.debug("Norm equivalence constant of %s on %r: %.6f", flux_desc, mesh, C)
    return C


def spectral_report(mesh, coeff, flux_desc, pot_degree, level=None):
    low, high, n_flux, n_pot = _pencil_extremes(mesh, coeff, flux_desc, pot_degree)
    C = norm_equivalence_constant(mesh, coeff, flux_desc)
    report = SpectralReport(float(np.sqrt(low)), C, float(np.sqrt(high)), level, coeff.jump_ratio, n_flux, n_pot)
    logger.info("  Level %s, alpha ratio %.1e: beta = %.5f, C_equiv = %.5f", level, coeff.jump_ratio,
                report.beta, report.C_equiv)
    return report


def spectral_sweep(meshes, alpha_layouts, flux_desc, pot_degree, filename=None):
    """
    beta and C_equiv over every (mesh level, coefficient layout) pair.

    Parameters
    ----------
    meshes : sequence of Mesh
        Level l is meshes[l].
    alpha_layouts : sequence of dict
        subdomain_id -> alpha.
    filename : str, optional
        Where to write the CSV.

    Returns
    -------
    pandas.DataFrame
        Columns level, n_flux, n_pot, alpha_ratio, beta, C_equiv.
    """
    rows = []
    for level, mesh in enumerate(meshes):
        for layout in alpha_layouts:
            coeff = build_coefficient(mesh, layout)
            rows.append(spectral_report(mesh, coeff, flux_desc, pot_degree, level).as_dict())
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    if filename is not None:
        create_missing_folders([os.path.dirname(filename)])
        frame.to_csv(filename, index=False)
    return frame

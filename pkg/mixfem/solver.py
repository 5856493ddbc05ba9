from __future__ import absolute_import, division, print_function

import logging
import time

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, splu

from .exceptions import SingularSystem, NoConvergence
from .spaces import FieldVector

logger = logging.getLogger(__name__)

METHODS = ("schur", "direct")
MAX_REFINEMENT_STEPS = 10


class SolveReport(object):
    """ Solution of a SaddleSystem together with its relative block residual. """

    def __init__(self, flux, potential, residual_norm, method, wall_time, iterations=0):
        self.flux = flux
        self.potential = potential
        self.residual_norm = residual_norm
        self.method = method
        self.wall_time = wall_time
        self.iterations = iterations

    def __repr__(self):
        return "SolveReport(method={}, residual={:.2e}, time={:.3f}s)".format(
            self.method, self.residual_norm, self.wall_time
        )


def _relative_residual(A, B, sigma, u_tilde, F_flux, F_pot):
    r_flux = F_flux - A.dot(sigma) - B.T.dot(u_tilde)
    r_pot = F_pot - B.dot(sigma)
    rhs_norm = np.sqrt(F_flux.dot(F_flux) + F_pot.dot(F_pot))
    norm = np.sqrt(r_flux.dot(r_flux) + r_pot.dot(r_pot))
    return (norm / rhs_norm if rhs_norm > 0 else norm), r_flux, r_pot


def _factorize(matrix, what):
    try:
        return splu(matrix.tocsc(), permc_spec="COLAMD")
    except RuntimeError as err:
        raise SingularSystem("Factorization of {} failed: {}".format(what, err)) from err


class _DirectSolver(object):
    def __init__(self, A, B):
        n_pot = B.shape[0]
        block = sp.bmat([[A, B.T], [B, sp.csr_matrix((n_pot, n_pot))]], format="csc")
        self.n_flux = A.shape[0]
        self.lu = _factorize(block, "the saddle-point matrix")

    def __call__(self, r_flux, r_pot):
        x = self.lu.solve(np.concatenate([r_flux, r_pot]))
        if not np.all(np.isfinite(x)):
            raise SingularSystem("Direct solve produced non-finite values")
        return x[:self.n_flux], x[self.n_flux:], 0


class _SchurSolver(object):
    """ A^{-1} by sparse LU, CG on S = B A^{-1} B^T with a Jacobi preconditioner from diag(B diag(A)^-1 B^T). """

    def __init__(self, A, B, tol):
        self.A = A
        self.B = B
        self.tol = tol
        self.lu = _factorize(A, "the flux mass matrix")
        n_pot = B.shape[0]

        def matvec(x):
            return B.dot(self.lu.solve(B.T.dot(x)))

        self.S = LinearOperator((n_pot, n_pot), matvec=matvec, dtype=float)
        diag_a = A.diagonal()
        if np.any(diag_a <= 0):
            raise SingularSystem("Flux mass matrix has a non-positive diagonal entry")
        approx = np.asarray(B.multiply(B).dot(1.0 / diag_a)).ravel()
        approx[approx <= 0] = 1.0
        self.preconditioner = LinearOperator((n_pot, n_pot), matvec=lambda x: x / approx, dtype=float)

    def __call__(self, r_flux, r_pot):
        a_inv_r = self.lu.solve(r_flux)
        rhs = self.B.dot(a_inv_r) - r_pot
        iterations = [0]

        def count(_):
            iterations[0] += 1

        u_tilde, info = cg(self.S, rhs, rtol=self.tol / 10.0, atol=0.0, M=self.preconditioner,
                           maxiter=max(100, 2 * self.B.shape[0]), callback=count)
        if info < 0:
            raise SingularSystem("CG broke down on the Schur complement (info={})".format(info))
        if info > 0:
            logger.warning("CG stopped after %s iterations without reaching rtol %.1e", info, self.tol / 10.0)
        sigma = self.lu.solve(r_flux - self.B.T.dot(u_tilde))
        return sigma, u_tilde, iterations[0]


def solve_saddle(system, tol=1e-10, method="schur"):
    """
    Solve the assembled mixed system.

    Parameters
    ----------
    system : SaddleSystem
    tol : float
        Required relative residual of the full block system, in [1e-14, 1e-6].
    method : {"schur", "direct"}
        Schur complement CG (default) or sparse LU of the whole indefinite block matrix.

    Returns
    -------
    SolveReport
    """
    if not 1e-14 <= tol <= 1e-6:
        raise ValueError("Solver tolerance must lie in [1e-14, 1e-6], got {}".format(tol))
    if method not in METHODS:
        raise ValueError("Unknown solver method {!r}, expected one of {}".format(method, METHODS))

    start = time.time()
    A = system.A.tocsr()
    B = system.B.tocsr()
    F_flux = np.asarray(system.F_flux, dtype=float)
    F_pot = np.asarray(system.F_pot, dtype=float)
    logger.info("  Solver:                 %s", method)
    logger.info("  Unknowns:               %s flux + %s potential", system.n_flux, system.n_pot)

    sigma = np.zeros(system.n_flux)
    u_tilde = np.zeros(system.n_pot)
    residual, r_flux, r_pot = _relative_residual(A, B, sigma, u_tilde, F_flux, F_pot)
    iterations = 0
    if residual > tol:
        inner = _DirectSolver(A, B) if method == "direct" else _SchurSolver(A, B, tol)
        # iterative refinement on the block residual
        for step in range(MAX_REFINEMENT_STEPS):
            d_sigma, d_u, its = inner(r_flux, r_pot)
            sigma += d_sigma
            u_tilde += d_u
            iterations += its
            residual, r_flux, r_pot = _relative_residual(A, B, sigma, u_tilde, F_flux, F_pot)
            logger.debug("Refinement step %s: relative residual %.3e", step, residual)
            if not np.isfinite(residual):
                raise SingularSystem("Solve produced a non-finite residual")
            if residual <= tol:
                break
        else:
            raise NoConvergence("Relative residual {:.3e} above tolerance {:.1e} after {} refinement steps".format(
                residual, tol, MAX_REFINEMENT_STEPS))

    wall_time = time.time() - start
    report = SolveReport(
        FieldVector(system.flux_dofmap, sigma),
        FieldVector(system.pot_dofmap, -u_tilde),
        float(residual),
        method,
        wall_time,
        iterations,
    )
    logger.info("  Relative residual:      %.3e", report.residual_norm)
    logger.debug("%r", report)
    return report

from __future__ import absolute_import, division, print_function

import logging
import os

import numpy as np
import pandas as pd

from .spaces import (
    FieldVector,
    edge_points,
    edge_trace_points,
    element_rule_groups,
    evaluate_flux,
    evaluate_scalar,
    l2_project,
    physical_points,
    scalar_trace,
)
from .utils.quadrature import edge_quadrature, quadrature
from .utils.tools import create_missing_folders

logger = logging.getLogger(__name__)

NORM_NAMES = ("flux_l2", "flux_alpha_h", "flux_hdiv", "pot_dg", "pot_l2", "post_dg")
ELEMENT_COLUMNS = ["triangle_id", "h_K", "alpha_K", "err_l2_sq", "err_div_sq"]


def _at(callable_, points):
    """ Evaluate a field callable on points of shape (nt, nq, 2). """
    nt, nq = points.shape[:2]
    values = np.asarray(callable_(points.reshape(-1, 2)), dtype=float)
    return values.reshape((nt, nq) + values.shape[1:])


def _flux_order(field):
    return min(20, 2 * field.space.poly_degree + 4)


def _scalar_order(field):
    return min(20, 2 * field.space.degree + 4)


# ----------------------------------------------------------------------
# element contributions

def flux_l2_elements(mesh, coeff, exact_sigma, sigma_h, singular_points=(), depth=6):
    """ alpha_K^{-1} ||sigma - sigma_h||_{0,K}^2 per triangle. """
    out = np.zeros(mesh.n_triangles)
    for idx, pts, wts in element_rule_groups(mesh, _flux_order(sigma_h), singular_points, depth):
        values, _ = evaluate_flux(mesh, sigma_h, pts, idx)
        exact = _at(exact_sigma, physical_points(mesh, pts, idx))
        out[idx] = np.einsum("q,kq->k", wts, np.sum((exact - values) ** 2, axis=2)) * mesh.det[idx]
    return out / coeff.alpha_by_triangle


def flux_divergence_elements(mesh, coeff, f, sigma_h, singular_points=(), depth=6):
    """ h_K^2 alpha_K^{-1} ||f - div sigma_h||_{0,K}^2 per triangle. """
    out = np.zeros(mesh.n_triangles)
    for idx, pts, wts in element_rule_groups(mesh, _flux_order(sigma_h), singular_points, depth):
        _, divergence = evaluate_flux(mesh, sigma_h, pts, idx)
        load = _at(f, physical_points(mesh, pts, idx))
        out[idx] = np.einsum("q,kq->k", wts, (load - divergence) ** 2) * mesh.det[idx]
    return mesh.h_K ** 2 * out / coeff.alpha_by_triangle


def potential_gradient_elements(mesh, coeff, exact_grad_u, u_field, singular_points=(), depth=6):
    """ alpha_K ||grad u - grad_h u_field||_{0,K}^2 per triangle. """
    out = np.zeros(mesh.n_triangles)
    for idx, pts, wts in element_rule_groups(mesh, _scalar_order(u_field) + 2, singular_points, depth):
        _, gradients = evaluate_scalar(mesh, u_field, pts, idx)
        exact = _at(exact_grad_u, physical_points(mesh, pts, idx))
        out[idx] = np.einsum("q,kq->k", wts, np.sum((exact - gradients) ** 2, axis=2)) * mesh.det[idx]
    return coeff.alpha_by_triangle * out


def potential_l2_elements(mesh, coeff, exact_u, u_field, singular_points=(), depth=6):
    """ alpha_K ||u - u_field||_{0,K}^2 per triangle. """
    out = np.zeros(mesh.n_triangles)
    for idx, pts, wts in element_rule_groups(mesh, _scalar_order(u_field) + 2, singular_points, depth):
        values, _ = evaluate_scalar(mesh, u_field, pts, idx)
        exact = _at(exact_u, physical_points(mesh, pts, idx))
        out[idx] = np.einsum("q,kq->k", wts, (exact - values) ** 2) * mesh.det[idx]
    return coeff.alpha_by_triangle * out


def potential_jump_edges(mesh, coeff, exact_u, u_field, g=None):
    """
    Edge terms of |||u - u_field|||_{alpha,h}^2: (alpha_{F,H}/h_F)||[u - u_field]||_F^2 on interior edges and
    (alpha_F/h_F)||g - u_field||_F^2 on Dirichlet edges. The exact u is continuous, so interior jumps only see
    u_field.
    """
    out = np.zeros(mesh.n_edges)
    s, w = edge_quadrature(_scalar_order(u_field))

    interior = mesh.interior_edges
    if len(interior):
        jump = scalar_trace(mesh, u_field, interior, 0, s) - scalar_trace(mesh, u_field, interior, 1, s)
        # ||.||_F^2 = h_F * int_0^1, divided by h_F
        out[interior] = coeff.alpha_harmonic_by_edge[interior] * (jump ** 2).dot(w)

    boundary = mesh.dirichlet_edges
    if len(boundary):
        data = _at(exact_u if g is None else g, edge_points(mesh, boundary, s))
        trace = scalar_trace(mesh, u_field, boundary, 0, s)
        out[boundary] = coeff.alpha_harmonic_by_edge[boundary] * ((data - trace) ** 2).dot(w)
    return out


def flux_trace_edges(mesh, coeff, tau_h):
    """ (h_F / alpha_{F,H}) ||tau_h . n||_F^2 per edge, using the owner triangle's trace. """
    out = np.zeros(mesh.n_edges)
    s, w = edge_quadrature(_flux_order(tau_h))
    edges = np.arange(mesh.n_edges)
    triangles, ref = edge_trace_points(mesh, edges, 0, s)
    local = mesh.edge_local_index[:, 0]
    for i in range(3):
        sel = np.flatnonzero(local == i)
        if len(sel) == 0:
            continue
        # points of one local edge share the reference parameterisation up to reversal
        for rev in (False, True):
            group = sel[mesh.edge_reversed[triangles[sel], i] == rev]
            if len(group) == 0:
                continue
            values, _ = evaluate_flux(mesh, tau_h, ref[group[0]], triangles[group])
            normal_trace = np.einsum("kqc,kc->kq", values, mesh.edge_normals[group])
            out[group] = mesh.h_F[group] ** 2 * (normal_trace ** 2).dot(w)
    return out / coeff.alpha_harmonic_by_edge


# ----------------------------------------------------------------------
# norms

def flux_error_weighted_l2(mesh, coeff, exact_sigma, sigma_h, singular_points=(), depth=6):
    """ ||alpha^{-1/2}(sigma - sigma_h)||_0, with dyadic quadrature on triangles touching singular points. """
    return float(np.sqrt(flux_l2_elements(mesh, coeff, exact_sigma, sigma_h, singular_points, depth).sum()))


def discrete_flux_norm_alpha_h(mesh, coeff, tau_h):
    """
    ||tau_h||_{alpha,h}^2 = ||alpha^{-1/2} tau_h||_0^2 + sum_F (h_F / alpha_{F,H}) ||tau_h . n||_F^2 for a discrete
    flux field, whose normal trace is single valued.
    """
    volume = flux_l2_elements(mesh, coeff, _zero_vector, tau_h).sum()
    edges = flux_trace_edges(mesh, coeff, tau_h).sum()
    return float(np.sqrt(volume + edges))


def _zero_vector(points):
    return np.zeros((len(points), 2))


def potential_error_dg(mesh, coeff, exact_u, exact_grad_u, u_field, g=None, singular_points=(), depth=6):
    """
    |||u - u_field|||_{alpha,h}: broken weighted gradient, interior jumps weighted by alpha_{F,H}/h_F and
    boundary terms (g - u_field) weighted by alpha_F/h_F. Works for u_h in D_k and for post-processed fields.
    """
    volume = potential_gradient_elements(mesh, coeff, exact_grad_u, u_field, singular_points, depth).sum()
    edges = potential_jump_edges(mesh, coeff, exact_u, u_field, g).sum()
    return float(np.sqrt(volume + edges))


def flux_error_hdiv_alpha_h(mesh, coeff, exact_sigma, f, sigma_h, singular_points=(), depth=6):
    """ (||alpha^{-1/2}(sigma - sigma_h)||_0^2 + sum_K h_K^2 ||alpha^{-1/2}(f - div sigma_h)||_{0,K}^2)^{1/2} """
    l2 = flux_l2_elements(mesh, coeff, exact_sigma, sigma_h, singular_points, depth).sum()
    div = flux_divergence_elements(mesh, coeff, f, sigma_h, singular_points, depth).sum()
    return float(np.sqrt(l2 + div))


def potential_error_l2(mesh, coeff, exact_u, u_field, singular_points=(), depth=6):
    """ ||alpha^{1/2}(u - u_field)||_0. """
    return float(np.sqrt(potential_l2_elements(mesh, coeff, exact_u, u_field, singular_points, depth).sum()))


def equilibration_defect(mesh, f, sigma_h, order=None):
    """ Max over triangles of the L2 norm of div sigma_h - Q_h f, Q_h onto the divergence degree of sigma_h. """
    k = sigma_h.space.div_degree
    projected = l2_project(mesh, k, f, order=order)
    rule = quadrature(2 * k + 2)
    _, divergence = evaluate_flux(mesh, sigma_h, rule.ref_points)
    values, _ = evaluate_scalar(mesh, projected, rule.ref_points)
    local = np.einsum("q,kq->k", rule.weights, (divergence - values) ** 2) * mesh.det
    return float(np.sqrt(local.max()))


# ----------------------------------------------------------------------
# reports

class NormReport(object):
    """
    Error norms of one solve, with the per-element and per-edge squared contributions they are made of.

    Attributes
    ----------
    values : dict
        norm name -> value, for the norms that were requested.
    elements : pandas.DataFrame
        One row per triangle: triangle_id, h_K, alpha_K, err_l2_sq, err_div_sq and, when computed, pot_grad_sq,
        post_grad_sq.
    edges : dict
        norm name -> per-edge squared contributions.
    """

    def __init__(self, values, elements, edges=None):
        self.values = dict(values)
        self.elements = elements
        self.edges = {} if edges is None else dict(edges)

    @property
    def flux_weighted_l2(self):
        return self.values.get("flux_l2")

    @property
    def flux_alpha_h(self):
        return self.values.get("flux_alpha_h")

    @property
    def flux_hdiv_alpha_h(self):
        return self.values.get("flux_hdiv")

    @property
    def pot_dg(self):
        return self.values.get("pot_dg")

    def class_totals(self, low_mask):
        """ Squared flux L2 and divergence errors summed over T_low and T_high. """
        low_mask = np.asarray(low_mask, dtype=bool)
        totals = {}
        for column in ("err_l2_sq", "err_div_sq"):
            values = self.elements[column].values
            totals[column + "_low"] = float(values[low_mask].sum())
            totals[column + "_high"] = float(values[~low_mask].sum())
        return totals

    def __repr__(self):
        return "NormReport({})".format(", ".join("{}={:.4e}".format(k, v) for k, v in sorted(self.values.items())))


def compute_norms(mesh, coeff, problem, sigma_h, u_h, norms=("flux_l2", "flux_hdiv", "pot_dg"), u_star=None,
                  interpolant=None, depth=6):
    """
    Evaluate the requested error norms of a solve against the exact solution of `problem`.

    Parameters
    ----------
    problem : ProblemSpec
        Supplies f, g, exact_u, exact_grad_u, exact_sigma and the singular points.
    norms : sequence of str
        Any of flux_l2, flux_alpha_h (||sigma_h - I_h sigma||_{alpha,h}, needs `interpolant`), flux_hdiv, pot_dg,
        pot_l2 and post_dg (needs `u_star`).
    """
    unknown = sorted(set(norms) - set(NORM_NAMES))
    if unknown:
        raise ValueError("Unknown norm(s) {}, expected a subset of {}".format(unknown, NORM_NAMES))
    singular = problem.singular_points
    values = {}
    edges = {}

    l2 = flux_l2_elements(mesh, coeff, problem.exact_sigma, sigma_h, singular, depth)
    div = flux_divergence_elements(mesh, coeff, problem.f, sigma_h, singular, depth)
    elements = pd.DataFrame({
        "triangle_id": np.arange(mesh.n_triangles),
        "h_K": mesh.h_K,
        "alpha_K": coeff.alpha_by_triangle,
        "err_l2_sq": l2,
        "err_div_sq": div,
    })
    if "flux_l2" in norms:
        values["flux_l2"] = float(np.sqrt(l2.sum()))
    if "flux_hdiv" in norms:
        values["flux_hdiv"] = float(np.sqrt(l2.sum() + div.sum()))
    if "flux_alpha_h" in norms:
        if interpolant is None:
            raise ValueError("flux_alpha_h needs the interpolant of the exact flux")
        difference = FieldVector(sigma_h.dofmap, sigma_h.coefficients - interpolant.coefficients)
        values["flux_alpha_h"] = discrete_flux_norm_alpha_h(mesh, coeff, difference)
    if "pot_dg" in norms:
        grad = potential_gradient_elements(mesh, coeff, problem.exact_grad_u, u_h, singular, depth)
        jumps = potential_jump_edges(mesh, coeff, problem.exact_u, u_h, problem.g)
        elements["pot_grad_sq"] = grad
        edges["pot_dg"] = jumps
        values["pot_dg"] = float(np.sqrt(grad.sum() + jumps.sum()))
    if "pot_l2" in norms:
        values["pot_l2"] = potential_error_l2(mesh, coeff, problem.exact_u, u_h, singular, depth)
    if "post_dg" in norms:
        if u_star is None:
            raise ValueError("post_dg needs the post-processed potential")
        grad = potential_gradient_elements(mesh, coeff, problem.exact_grad_u, u_star, singular, depth)
        jumps = potential_jump_edges(mesh, coeff, problem.exact_u, u_star, problem.g)
        elements["post_grad_sq"] = grad
        edges["post_dg"] = jumps
        values["post_dg"] = float(np.sqrt(grad.sum() + jumps.sum()))

    report = NormReport(values, elements, edges)
    logger.debug("%r", report)
    return report


def element_breakdown_frame(report):
    """ The per-element table restricted to the exported columns. """
    return report.elements[ELEMENT_COLUMNS].copy()


def write_element_csv(report, filename):
    create_missing_folders([os.path.dirname(filename)])
    element_breakdown_frame(report).to_csv(filename, index=False)
    logger.debug("Element breakdown written to %s", filename)

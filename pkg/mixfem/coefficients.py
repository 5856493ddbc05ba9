from __future__ import absolute_import, division, print_function

import logging

import numpy as np

from .exceptions import NonPositiveCoefficient, MissingSubdomain
from .mesh import INTERIOR

logger = logging.getLogger(__name__)


def harmonic_average(a_plus, a_minus):
    """ alpha+ alpha- / (alpha+ + alpha-); works elementwise on arrays. """
    a_plus = np.asarray(a_plus, dtype=float)
    a_minus = np.asarray(a_minus, dtype=float)
    if np.any(~(a_plus > 0)) or np.any(~(a_minus > 0)):
        raise NonPositiveCoefficient("Harmonic average needs positive coefficients, got {} and {}".format(
            a_plus, a_minus))
    value = a_plus * a_minus / (a_plus + a_minus)
    return float(value) if value.ndim == 0 else value


class CoefficientField(object):
    """
    Piecewise-constant diffusion coefficient resolved on a mesh.

    Attributes
    ----------
    alpha_by_subdomain : dict
        subdomain_id -> alpha.
    alpha_by_triangle : ndarray
        (nt,) alpha_K.
    alpha_harmonic_by_edge : ndarray
        (ne,) harmonic average on interior edges, the single incident alpha on Dirichlet edges.
    alpha_plus, alpha_minus : ndarray
        (ne,) alpha of the lower-indexed incident triangle and of the other one (equal to alpha_plus on the
        boundary).
    """

    def __init__(self, mesh, alpha_by_subdomain):
        self.alpha_by_subdomain = {int(k): float(v) for k, v in dict(alpha_by_subdomain).items()}
        bad = {k: v for k, v in self.alpha_by_subdomain.items() if not v > 0}
        if bad:
            raise NonPositiveCoefficient("Coefficients must be positive, got {}".format(bad))
        missing = sorted(set(int(s) for s in np.unique(mesh.subdomain_ids)) - set(self.alpha_by_subdomain))
        if missing:
            raise MissingSubdomain("No coefficient given for subdomain(s) {}".format(missing))

        lookup = np.zeros(int(mesh.subdomain_ids.max()) + 1)
        for sid, alpha in self.alpha_by_subdomain.items():
            if sid < len(lookup):
                lookup[sid] = alpha
        self.alpha_by_triangle = lookup[mesh.subdomain_ids]

        e2t = mesh.edge_to_triangles
        interior = mesh.edge_class == INTERIOR
        self.alpha_plus = self.alpha_by_triangle[e2t[:, 0]]
        self.alpha_minus = self.alpha_plus.copy()
        self.alpha_minus[interior] = self.alpha_by_triangle[e2t[interior, 1]]
        self.alpha_harmonic_by_edge = self.alpha_plus.copy()
        self.alpha_harmonic_by_edge[interior] = harmonic_average(
            self.alpha_plus[interior], self.alpha_minus[interior]
        )
        for array in (self.alpha_by_triangle, self.alpha_plus, self.alpha_minus, self.alpha_harmonic_by_edge):
            array.setflags(write=False)
        self.mesh = mesh

    @property
    def jump_ratio(self):
        values = list(self.alpha_by_subdomain.values())
        return max(values) / min(values)

    def scaled(self, factor):
        """ The same layout with every alpha multiplied by `factor`. """
        return CoefficientField(self.mesh, {k: factor * v for k, v in self.alpha_by_subdomain.items()})

    def __repr__(self):
        return "CoefficientField({})".format(self.alpha_by_subdomain)


def build_coefficient(mesh, alpha_by_subdomain):
    coeff = CoefficientField(mesh, alpha_by_subdomain)
    logger.debug("Coefficient %r, jump ratio %.3g", coeff, coeff.jump_ratio)
    return coeff

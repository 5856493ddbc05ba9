from __future__ import absolute_import, division, print_function

import logging
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import legvander

from .exceptions import UnsupportedDegree
from .utils.quadrature import (
    REFERENCE_VERTICES,
    QuadratureRule,
    quadrature,
    edge_quadrature,
    corner_graded_rule,
    endpoint_graded_rule,
)

logger = logging.getLogger(__name__)

__all__ = [
    "SpaceDescriptor",
    "QuadratureRule",
    "quadrature",
    "scalar_basis",
    "flux_basis",
    "dof_functionals",
    "piola_map",
]

DEFAULT_QUAD_EXCESS = 4
SUPPORTED_DEGREES = {"RT": (0, 1), "BDM": (1, 2), "D": (0, 1, 2, 3)}
_FAMILY_ALIASES = {
    "RT": "RT",
    "BDM": "BDM",
    "D": "D",
    "DG": "D",
    "DISCONTINUOUSSCALAR": "D",
}


class SpaceDescriptor(object):
    """
    Element family and degree.

    Parameters
    ----------
    family : str
        "RT", "BDM" or "D" (discontinuous scalar P_k, also accepted as "DG" / "DiscontinuousScalar").
    degree : int
        Polynomial index k. RT supports 0-1, BDM 1-2, D 0-3.
    """

    def __init__(self, family, degree):
        key = str(family).replace("_", "").upper()
        if key not in _FAMILY_ALIASES:
            raise ValueError("Unknown element family {!r}, expected RT, BDM or D".format(family))
        self.family = _FAMILY_ALIASES[key]
        if int(degree) != degree:
            raise UnsupportedDegree("Degree must be an integer, got {!r}".format(degree))
        self.degree = int(degree)
        if self.degree not in SUPPORTED_DEGREES[self.family]:
            raise UnsupportedDegree(
                "{} degree {} not supported (supported: {})".format(
                    self.family, degree, SUPPORTED_DEGREES[self.family]
                )
            )

    @property
    def is_flux(self):
        return self.family != "D"

    @property
    def dim(self):
        k = self.degree
        if self.family == "RT":
            return (k + 1) * (k + 3)
        if self.family == "BDM":
            return (k + 1) * (k + 2)
        return (k + 1) * (k + 2) // 2

    @property
    def n_edge_dofs(self):
        return self.degree + 1 if self.is_flux else 0

    @property
    def n_interior_dofs(self):
        return self.dim - 3 * self.n_edge_dofs

    @property
    def poly_degree(self):
        """ Highest total degree appearing in the shape functions. """
        return self.degree + 1 if self.family == "RT" else self.degree

    @property
    def div_degree(self):
        """ Degree of the scalar space the divergence maps onto (RT_k -> P_k, BDM_k -> P_{k-1}). """
        if self.family == "RT":
            return self.degree
        if self.family == "BDM":
            return self.degree - 1
        raise ValueError("div_degree is only defined for flux spaces")

    def __eq__(self, other):
        return isinstance(other, SpaceDescriptor) and (self.family, self.degree) == (other.family, other.degree)

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash((self.family, self.degree))

    def __repr__(self):
        return "{}{}".format(self.family, self.degree)


# ----------------------------------------------------------------------
# monomials in reference coordinates

@lru_cache(maxsize=None)
def _exponents(degree):
    return tuple((d - b, b) for d in range(degree + 1) for b in range(d + 1))


def _monomial_values(exps, pts):
    a = np.array([e[0] for e in exps])
    b = np.array([e[1] for e in exps])
    return pts[:, 0:1] ** a[None, :] * pts[:, 1:2] ** b[None, :]


def _monomial_gradients(exps, pts):
    a = np.array([e[0] for e in exps])
    b = np.array([e[1] for e in exps])
    x, y = pts[:, 0:1], pts[:, 1:2]
    dx = a[None, :] * x ** np.maximum(a - 1, 0)[None, :] * y ** b[None, :]
    dy = b[None, :] * x ** a[None, :] * y ** np.maximum(b - 1, 0)[None, :]
    return np.stack([dx, dy], axis=2)


def _as_points(ref_point):
    pts = np.asarray(ref_point, dtype=float)
    single = pts.ndim == 1
    return np.atleast_2d(pts), single


def scalar_basis(k, ref_point):
    """
    Hierarchical basis of P_k on the reference triangle: the monomials 1, x, y, x^2, xy, y^2, ... in reference
    coordinates (x = lambda_1, y = lambda_2).

    Parameters
    ----------
    k : int
        Degree, 0 <= k <= 3.
    ref_point : ndarray
        One reference point (2,) or several (n, 2).

    Returns
    -------
    values : ndarray
        Shape (dim,) or (n, dim).
    gradients : ndarray
        Reference gradients, shape (dim, 2) or (n, dim, 2).
    """
    if int(k) != k or k not in SUPPORTED_DEGREES["D"]:
        raise UnsupportedDegree("Scalar degree must be in 0..3, got {}".format(k))
    pts, single = _as_points(ref_point)
    exps = _exponents(int(k))
    values = _monomial_values(exps, pts)
    gradients = _monomial_gradients(exps, pts)
    if single:
        return values[0], gradients[0]
    return values, gradients


def scalar_gram(k):
    """ Reference Gram matrix of the scalar basis. """
    rule = quadrature(max(1, 2 * k))
    values, _ = scalar_basis(k, rule.ref_points)
    return np.einsum("q,qi,qj->ij", rule.weights, values, values)


# ----------------------------------------------------------------------
# reference flux elements

def _prime_basis(desc):
    """ Coefficients (n_prime, 2, n_monomials) of a spanning set of the shape space. """
    k = desc.degree
    exps = _exponents(desc.poly_degree)
    index = {e: n for n, e in enumerate(exps)}
    prime = []
    for e in _exponents(k):
        for c in range(2):
            coef = np.zeros((2, len(exps)))
            coef[c, index[e]] = 1.0
            prime.append(coef)
    if desc.family == "RT":
        for e in _exponents(k)[-(k + 1):]:
            coef = np.zeros((2, len(exps)))
            coef[0, index[(e[0] + 1, e[1])]] = 1.0
            coef[1, index[(e[0], e[1] + 1)]] = 1.0
            prime.append(coef)
    return np.array(prime), exps


def _interior_tests(desc, pts):
    """ Interior test functions at reference points, shape (n, n_interior, 2). """
    k = desc.degree
    n = len(pts)
    if desc.family == "RT":
        if k == 0:
            return np.zeros((n, 0, 2))
        mono = _monomial_values(_exponents(k - 1), pts)
        tests = np.zeros((n, 2 * mono.shape[1], 2))
        tests[:, 0::2, 0] = mono
        tests[:, 1::2, 1] = mono
        return tests
    if k == 1:
        return np.zeros((n, 0, 2))
    # lowest-order Nedelec: (1, 0), (0, 1), (-y, x)
    tests = np.zeros((n, 3, 2))
    tests[:, 0, 0] = 1.0
    tests[:, 1, 1] = 1.0
    tests[:, 2, 0] = -pts[:, 1]
    tests[:, 2, 1] = pts[:, 0]
    return tests


def _interior_test_degree(desc):
    if desc.family == "RT":
        return max(desc.degree - 1, 0)
    return 0 if desc.degree == 1 else 1


def _edge_moments(desc, P, field, edge_rules):
    """
    Edge moments of tau.n against Legendre polynomials, in the local parameterisation vertex i+1 -> vertex i+2
    with the outward normal, for every triangle in the batch.

    P : (nt, 3, 2) physical vertices. field : callable on (n, 2) points returning (n, 2).
    """
    nt = len(P)
    ne = desc.n_edge_dofs
    moments = np.zeros((nt, 3 * ne))
    for i in range(3):
        s, w = edge_rules[i]
        a = P[:, (i + 1) % 3]
        tangent = P[:, (i + 2) % 3] - a
        normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)
        x = a[:, None, :] + s[None, :, None] * tangent[:, None, :]
        values = np.asarray(field(x.reshape(-1, 2)), dtype=float).reshape(nt, len(s), 2)
        flux = np.einsum("kqc,kc->kq", values, normal)
        leg = legvander(2.0 * s - 1.0, ne - 1)
        moments[:, i * ne:(i + 1) * ne] = np.einsum("q,kq,qj->kj", w, flux, leg)
    return moments


def _interior_moments(desc, P, field, rule_points, rule_weights):
    nt = len(P)
    if desc.n_interior_dofs == 0:
        return np.zeros((nt, 0))
    J = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=2)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    x = P[:, None, 0, :] + np.einsum("kij,qj->kqi", J, rule_points)
    values = np.asarray(field(x.reshape(-1, 2)), dtype=float).reshape(nt, len(rule_weights), 2)
    # contravariant pull-back: det(J) J^{-1} tau
    pulled = det[:, None, None] * np.einsum("kij,kqj->kqi", np.linalg.inv(J), values)
    tests = _interior_tests(desc, rule_points)
    return np.einsum("q,kqc,qmc->km", rule_weights, pulled, tests)


def _quadrature_orders(desc, quad_excess):
    edge = desc.n_edge_dofs - 1 + desc.poly_degree + 1 + quad_excess
    interior = min(20, max(1, _interior_test_degree(desc) + desc.poly_degree + quad_excess))
    return edge, interior


def _moments_batch(desc, P, field, quad_excess=DEFAULT_QUAD_EXCESS, corner=-1, depth=4):
    """ Local DOF functionals for a batch of triangles, optionally graded toward local vertex `corner`. """
    edge_order, interior_order = _quadrature_orders(desc, quad_excess)
    plain = edge_quadrature(edge_order)
    edge_rules = []
    for i in range(3):
        if corner == (i + 1) % 3:
            edge_rules.append(endpoint_graded_rule(edge_order, 0, depth))
        elif corner == (i + 2) % 3:
            edge_rules.append(endpoint_graded_rule(edge_order, 1, depth))
        else:
            edge_rules.append(plain)
    if corner >= 0:
        pts, wts = corner_graded_rule(interior_order, corner, depth)
    else:
        rule = quadrature(interior_order)
        pts, wts = rule.ref_points, rule.weights
    return np.hstack([_edge_moments(desc, P, field, edge_rules), _interior_moments(desc, P, field, pts, wts)])


class _ReferenceFlux(object):
    """ Nodal basis of a flux element on the reference triangle, dual to the moment functionals. """

    def __init__(self, desc):
        prime, exps = _prime_basis(desc)
        self.exps = exps
        P = REFERENCE_VERTICES[None, :, :]

        columns = []
        for coef in prime:
            def field(x, coef=coef):
                return _monomial_values(exps, x).dot(coef.T)
            columns.append(_moments_batch(desc, P, field, quad_excess=desc.poly_degree)[0])
        V = np.array(columns).T
        self.condition = np.linalg.cond(V)
        self.coefficients = np.einsum("pj,pcm->jcm", np.linalg.inv(V), prime)
        logger.debug("Reference %s basis: duality matrix condition %.2e", desc, self.condition)

    def evaluate(self, pts):
        mono = _monomial_values(self.exps, pts)
        grads = _monomial_gradients(self.exps, pts)
        values = np.einsum("qm,jcm->qjc", mono, self.coefficients)
        divergence = np.einsum("qm,jm->qj", grads[:, :, 0], self.coefficients[:, 0, :]) + np.einsum(
            "qm,jm->qj", grads[:, :, 1], self.coefficients[:, 1, :]
        )
        return values, divergence


@lru_cache(maxsize=None)
def reference_flux(desc):
    if not desc.is_flux:
        raise ValueError("{} is not a flux space".format(desc))
    return _ReferenceFlux(desc)


def reference_flux_basis(desc, ref_points):
    """ Reference basis values (n, nb, 2) and divergences (n, nb). """
    pts, _ = _as_points(ref_points)
    return reference_flux(desc).evaluate(pts)


def piola_map(jacobians, det, ref_values, ref_divergence, signs=None):
    """
    Contravariant Piola transform of reference basis data onto a batch of triangles.

    Parameters
    ----------
    jacobians : ndarray
        (nt, 2, 2) affine map Jacobians.
    det : ndarray
        (nt,) Jacobian determinants (positive).
    ref_values : ndarray
        (n, nb, 2) reference values.
    ref_divergence : ndarray
        (n, nb) reference divergences.
    signs : ndarray, optional
        (nt, nb) orientation signs of the global DOFs.

    Returns
    -------
    values : ndarray
        (nt, n, nb, 2) physical values J v / det J.
    divergence : ndarray
        (nt, n, nb) physical divergences div v / det J.
    """
    values = np.einsum("kij,qbj->kqbi", jacobians, ref_values) / det[:, None, None, None]
    divergence = ref_divergence[None, :, :] / det[:, None, None]
    if signs is not None:
        values = values * signs[:, None, :, None]
        divergence = divergence * signs[:, None, :]
    return values, divergence


def _geometry(triangle_geometry):
    P = np.asarray(triangle_geometry, dtype=float).reshape(3, 2)
    J = np.column_stack([P[1] - P[0], P[2] - P[0]])
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    if det <= 0:
        raise ValueError("triangle_geometry must be a counterclockwise, non-degenerate triangle")
    return P, J, det


def flux_basis(desc, triangle_geometry, ref_point, signs=None):
    """
    Physical RT_k / BDM_k basis on one triangle.

    The basis is dual to `dof_functionals` on the same triangle (local orientation: outward normals, edge i
    parameterised from vertex i+1 to vertex i+2). Pass `signs` to switch to a global orientation.

    Returns
    -------
    values : ndarray
        (nb, 2) for a single point, else (n, nb, 2).
    divergences : ndarray
        (nb,) or (n, nb).
    """
    if not isinstance(desc, SpaceDescriptor) or not desc.is_flux:
        raise UnsupportedDegree("flux_basis needs an RT or BDM descriptor, got {!r}".format(desc))
    _, J, det = _geometry(triangle_geometry)
    pts, single = _as_points(ref_point)
    ref_values, ref_div = reference_flux(desc).evaluate(pts)
    sign_batch = None if signs is None else np.asarray(signs, dtype=float)[None, :]
    values, divergence = piola_map(J[None], np.array([det]), ref_values, ref_div, sign_batch)
    values, divergence = values[0], divergence[0]
    if single:
        return values[0], divergence[0]
    return values, divergence


def dof_functionals(desc, triangle_geometry, field, quad_excess=DEFAULT_QUAD_EXCESS, singular_corner=-1, depth=4):
    """
    Moment functionals defining the canonical interpolant on one triangle.

    Edge moments of tau.n against Legendre polynomials of degree <= k on every edge, followed by interior moments
    (RT_k: against P_{k-1}^2; BDM_2: against the lowest-order Nedelec space), all taken on the contravariant
    pull-back. `field` maps points (n, 2) to values (n, 2).

    Parameters
    ----------
    quad_excess : int
        Orders added on top of the polynomial degrees involved, for non-polynomial fields.
    singular_corner : int
        Local vertex toward which the quadrature is refined dyadically (-1 for none).
    depth : int
        Number of dyadic levels.
    """
    P, _, _ = _geometry(triangle_geometry)
    return _moments_batch(desc, P[None], field, quad_excess, singular_corner, depth)[0]

from __future__ import absolute_import, division, print_function

import logging
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..exceptions import UnsupportedOrder

logger = logging.getLogger(__name__)

MAX_ORDER = 20
REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class QuadratureRule(object):
    """
    Quadrature rule on the reference triangle (0,0), (1,0), (0,1).

    Parameters
    ----------
    points : ndarray
        Barycentric coordinates of the nodes, shape (n, 3).
    weights : ndarray
        Weights of shape (n,), summing to the reference area 1/2.
    order : int
        Total polynomial degree integrated exactly.
    """

    def __init__(self, points, weights, order):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.order = order
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def ref_points(self):
        # x_hat = lambda_1, y_hat = lambda_2
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return "QuadratureRule(order={}, n_points={})".format(self.order, len(self))


def _gauss_unit_interval(n):
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def quadrature(order):
    """
    Triangle rule exact for polynomials of total degree <= order.

    Orders 1 and 2 use the centroid and the three-point interior rule; higher orders use the collapsed
    (Duffy) tensor product of Gauss-Legendre rules.
    """
    if not isinstance(order, (int, np.integer)) or order < 1 or order > MAX_ORDER:
        raise UnsupportedOrder("Quadrature order must be an integer in [1, {}], got {}".format(MAX_ORDER, order))

    if order == 1:
        return QuadratureRule([[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]], [0.5], 1)
    if order == 2:
        a, b = 2.0 / 3.0, 1.0 / 6.0
        return QuadratureRule([[a, b, b], [b, a, b], [b, b, a]], [1.0 / 6.0] * 3, 2)

    n = int(np.ceil((order + 2) / 2.0))
    u, wu = _gauss_unit_interval(n)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    ww = np.outer(wu, wu) * (1.0 - uu)
    x = uu.ravel()
    y = (vv * (1.0 - uu)).ravel()
    points = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule(points, ww.ravel(), order)


@lru_cache(maxsize=None)
def edge_quadrature(order):
    """ Gauss-Legendre nodes and weights on [0, 1], exact up to degree `order`. """
    if order < 0 or order > 4 * MAX_ORDER:
        raise UnsupportedOrder("Edge quadrature order {} out of range".format(order))
    n = max(1, int(np.ceil((order + 1) / 2.0)))
    t, w = _gauss_unit_interval(n)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def _map_rule(rule, corners):
    """ Push the reference rule onto the sub-triangle with vertices `corners` (reference coordinates). """
    pts = rule.points.dot(corners)
    e1 = corners[1] - corners[0]
    e2 = corners[2] - corners[0]
    scale = abs(e1[0] * e2[1] - e1[1] * e2[0])
    return pts, rule.weights * scale


@lru_cache(maxsize=None)
def corner_graded_rule(order, corner, depth):
    """
    Composite reference rule, dyadically refined toward reference vertex `corner`.

    Each level splits the triangle touching the corner into four similar children; the three children away from
    the corner get the base rule. Returns reference points (m, 2) and weights (m,).
    """
    rule = quadrature(order)
    tri = REFERENCE_VERTICES[[corner, (corner + 1) % 3, (corner + 2) % 3]].copy()
    points, weights = [], []
    for _ in range(depth):
        c, p, q = tri
        mcp, mcq, mpq = 0.5 * (c + p), 0.5 * (c + q), 0.5 * (p + q)
        for child in ([mcp, p, mpq], [mcq, mpq, q], [mpq, mcq, mcp]):
            pts, wts = _map_rule(rule, np.array(child))
            points.append(pts)
            weights.append(wts)
        tri = np.array([c, mcp, mcq])
    pts, wts = _map_rule(rule, tri)
    points.append(pts)
    weights.append(wts)
    points, weights = np.vstack(points), np.concatenate(weights)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


@lru_cache(maxsize=None)
def endpoint_graded_rule(order, end, depth):
    """ Composite Gauss rule on [0, 1] with dyadic intervals toward t = `end` (0 or 1). """
    t, w = edge_quadrature(order)
    breaks = np.concatenate([[0.0], 0.5 ** np.arange(depth, -1, -1)])
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        nodes.append(a + (b - a) * t)
        weights.append((b - a) * w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    if end == 1:
        nodes = 1.0 - nodes
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights

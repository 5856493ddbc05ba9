from __future__ import absolute_import, division, print_function

import logging
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from sklearn.utils import check_random_state

from .exceptions import UnknownProblem, InvalidParams, RootFindFailure
from .mesh import rectangle_mesh

logger = logging.getLogger(__name__)

PROBLEMS = ("smooth", "interface_smooth", "kellogg")
TRANSMISSION_TOL = 1e-10


class ProblemSpec(object):
    """
    A benchmark -div(alpha grad u) = f in Omega, u = g on the boundary, with piecewise-constant alpha.

    Attributes
    ----------
    name : str
    mesh_factory : callable
        mesh_factory(n) returns a structured n x n base mesh of the domain carrying the subdomain layout; n must be
        even for the interface problems so the interfaces are mesh lines.
    alpha_by_subdomain : dict
    f, g : callable
        Load and Dirichlet data, points (n, 2) -> (n,).
    exact_u, exact_grad_u, exact_sigma, exact_hessian : callable
        Exact solution data, points (n, 2) -> (n,), (n, 2), (n, 2), (n, 2, 2).
    singular_points : list
        Points where the exact solution is singular.
    regularity : callable
        regularity(mesh) -> s_K per triangle (np.inf where the solution is smooth).
    subdomain_of : callable
        points (n, 2) -> subdomain ids (n,).
    pieces : dict
        subdomain id -> (u, grad_u, hessian) callables of the smooth extension on that subdomain.
    interfaces : list
        Interface segments ((x0, y0), (x1, y1)).
    bounds : tuple
        (x_min, x_max, y_min, y_max) of the square domain.
    exact_energy : float or None
        ||alpha^{1/2} grad u||_0 where known in closed form.
    params : dict
    """

    def __init__(self, name, mesh_factory, alpha_by_subdomain, f, g, subdomain_of, pieces, bounds,
                 singular_points=(), regularity=None, interfaces=(), exact_energy=None, params=None):
        self.name = name
        self.mesh_factory = mesh_factory
        self.alpha_by_subdomain = dict(alpha_by_subdomain)
        self.f = f
        self.g = g
        self.subdomain_of = subdomain_of
        self.pieces = dict(pieces)
        self.bounds = tuple(bounds)
        self.singular_points = [tuple(p) for p in singular_points]
        self._regularity = regularity
        self.interfaces = list(interfaces)
        self.exact_energy = exact_energy
        self.params = {} if params is None else dict(params)

    def _dispatch(self, which, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        ids = np.asarray(self.subdomain_of(points))
        out = None
        for sid, piece in self.pieces.items():
            mask = ids == sid
            if not np.any(mask):
                continue
            values = piece[which](points[mask])
            if out is None:
                out = np.zeros((len(points),) + values.shape[1:])
            out[mask] = values
        if out is None:
            out = np.zeros(len(points))
        return out

    def alpha_at(self, points):
        ids = np.asarray(self.subdomain_of(np.atleast_2d(points)))
        return np.array([self.alpha_by_subdomain[int(i)] for i in ids], dtype=float)

    def exact_u(self, points):
        return self._dispatch(0, points)

    def exact_grad_u(self, points):
        return self._dispatch(1, points)

    def exact_hessian(self, points):
        return self._dispatch(2, points)

    def exact_sigma(self, points):
        return -self.alpha_at(points)[:, None] * self.exact_grad_u(points)

    def regularity(self, mesh):
        if self._regularity is None:
            return np.full(mesh.n_triangles, np.inf)
        return self._regularity(mesh)

    def base_mesh(self, n=2):
        return self.mesh_factory(n)

    def __repr__(self):
        return "ProblemSpec({}, {})".format(self.name, self.params)


# ----------------------------------------------------------------------
# smooth

def _sin_sin(points):
    return np.sin(np.pi * points[:, 0]) * np.sin(np.pi * points[:, 1])


def _sin_sin_grad(points):
    x, y = points[:, 0], points[:, 1]
    return np.pi * np.column_stack([np.cos(np.pi * x) * np.sin(np.pi * y), np.sin(np.pi * x) * np.cos(np.pi * y)])


def _sin_sin_hessian(points):
    x, y = points[:, 0], points[:, 1]
    diag = -np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y)
    off = np.pi ** 2 * np.cos(np.pi * x) * np.cos(np.pi * y)
    return np.stack([np.column_stack([diag, off]), np.column_stack([off, diag])], axis=1)


def _sin_sin_load(points):
    return 2.0 * np.pi ** 2 * _sin_sin(points)


def _zero(points):
    return np.zeros(len(np.atleast_2d(points)))


def _single_domain(points):
    return np.zeros(len(np.atleast_2d(points)), dtype=np.int64)


def _smooth():
    bounds = (0.0, 1.0, 0.0, 1.0)
    return ProblemSpec(
        "smooth",
        lambda n=2: rectangle_mesh(n, n, bounds),
        {0: 1.0},
        _sin_sin_load,
        _zero,
        _single_domain,
        {0: (_sin_sin, _sin_sin_grad, _sin_sin_hessian)},
        bounds,
        exact_energy=np.pi / np.sqrt(2.0),
    )


# ----------------------------------------------------------------------
# interface_smooth

def _left_right(points):
    points = np.atleast_2d(points)
    return np.where(points[:, 0] < 0.0, 0, 1).astype(np.int64)


def _scaled_piece(alpha):
    return (
        lambda p: _sin_sin(p) / alpha,
        lambda p: _sin_sin_grad(p) / alpha,
        lambda p: _sin_sin_hessian(p) / alpha,
    )


def _interface_smooth(jump_ratio=1000.0):
    try:
        R = float(jump_ratio)
    except (TypeError, ValueError) as err:
        raise InvalidParams("jump_ratio must be a number, got {!r}".format(jump_ratio)) from err
    if not R > 0 or not np.isfinite(R):
        raise InvalidParams("jump_ratio must be positive and finite, got {}".format(jump_ratio))
    bounds = (-1.0, 1.0, -1.0, 1.0)
    return ProblemSpec(
        "interface_smooth",
        lambda n=2: rectangle_mesh(n, n, bounds, subdomain_of=_left_right),
        {0: R, 1: 1.0},
        _sin_sin_load,
        _zero,
        _left_right,
        {0: _scaled_piece(R), 1: _scaled_piece(1.0)},
        bounds,
        interfaces=[((0.0, -1.0), (0.0, 1.0))],
        exact_energy=float(np.pi * np.sqrt(1.0 + 1.0 / R)),
        params={"jump_ratio": R},
    )


# ----------------------------------------------------------------------
# kellogg

def _quadrant(points):
    """ Subdomain id by quadrant, counterclockwise from the positive x axis. """
    points = np.atleast_2d(points)
    theta = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
    return np.minimum((theta // (0.5 * np.pi)).astype(np.int64), 3)


def _transfer(alpha, c):
    """ Maps (mu, alpha mu' / gamma) across one sector of opening pi/2, with c = gamma pi / 2. """
    return np.array([[np.cos(c), np.sin(c) / alpha], [-alpha * np.sin(c), np.cos(c)]])


def _transmission_matrix(gamma, R):
    """
    8 x 8 transmission system in the unknowns (a_i, b_i) of mu_i(phi) = a_i cos(gamma phi) + b_i sin(gamma phi),
    phi the angle measured from the start of sector i: continuity of mu and alpha mu' at the end of every sector.
    """
    c = 0.5 * np.pi * gamma
    alpha = (R, 1.0, R, 1.0)
    M = np.zeros((8, 8))
    for i in range(4):
        j = (i + 1) % 4
        M[2 * i, 2 * i] = np.cos(c)
        M[2 * i, 2 * i + 1] = np.sin(c)
        M[2 * i, 2 * j] = -1.0
        M[2 * i + 1, 2 * i] = -alpha[i] * np.sin(c)
        M[2 * i + 1, 2 * i + 1] = alpha[i] * np.cos(c)
        M[2 * i + 1, 2 * j + 1] = -alpha[j]
    return M


def _half_turn_trace(gamma, R):
    """ trace(T_1 T_R) + 2, which vanishes exactly when the transmission system is singular for R > 1. """
    c = 0.5 * np.pi * gamma
    return float(np.trace(_transfer(1.0, c).dot(_transfer(R, c))) + 2.0)


@lru_cache(maxsize=64)
def kellogg_constants(gamma):
    """
    Coefficient ratio and angular function of the checkerboard solution u = r^gamma mu(theta).

    alpha is R on the first and third quadrants and 1 on the others; R > 1 is the root of the transmission system
    for the given gamma, mu its (normalized) null vector.

    Returns
    -------
    R : float
    mu : ndarray
        (4, 2) coefficients (a_i, b_i) per quadrant, angles measured from the start of the quadrant.
    """
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise InvalidParams("Kellogg exponent must lie in (0, 1), got {}".format(gamma))

    grid = 1.0 + np.logspace(-12.0, 12.0, 600)
    values = np.array([_half_turn_trace(gamma, R) for R in grid])
    change = np.flatnonzero(np.sign(values[:-1]) != np.sign(values[1:]))
    if len(change) == 0:
        raise RootFindFailure("No sign change of the transmission determinant for gamma={}".format(gamma))
    lo, hi = grid[change[0]], grid[change[0] + 1]
    try:
        R = brentq(lambda r: _half_turn_trace(gamma, r), lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                   maxiter=200)
    except (RuntimeError, ValueError) as err:
        raise RootFindFailure("Root finding for gamma={} failed: {}".format(gamma, err)) from err

    M = _transmission_matrix(gamma, R)
    _, singular_values, vt = np.linalg.svd(M)
    mu = vt[-1]
    residual = np.linalg.norm(M.dot(mu)) / max(1.0, np.linalg.norm(M, 2))
    if residual > TRANSMISSION_TOL:
        raise RootFindFailure("Transmission residual {:.2e} for gamma={} (R={})".format(residual, gamma, R))
    if mu[0] < 0:
        mu = -mu
    mu = mu / np.abs(mu).max()
    logger.debug("Kellogg gamma=%s: R=%.12g, transmission residual %.2e", gamma, R, residual)
    mu = mu.reshape(4, 2)
    mu.setflags(write=False)
    return float(R), mu


def _kellogg_pieces(gamma, mu):
    def sector(i):
        a, b = mu[i]
        start = 0.5 * np.pi * i

        def polar(points):
            points = np.atleast_2d(points)
            r = np.hypot(points[:, 0], points[:, 1])
            r = np.where(r > 0, r, np.finfo(float).tiny)
            theta = np.arctan2(points[:, 1], points[:, 0])
            phi = np.mod(theta - start, 2.0 * np.pi)
            m = a * np.cos(gamma * phi) + b * np.sin(gamma * phi)
            dm = gamma * (-a * np.sin(gamma * phi) + b * np.cos(gamma * phi))
            return r, theta, m, dm

        def u(points):
            r, _, m, _ = polar(points)
            return r ** gamma * m

        def grad(points):
            r, theta, m, dm = polar(points)
            u_r = gamma * r ** (gamma - 1.0) * m
            u_t = r ** (gamma - 1.0) * dm
            return np.column_stack([
                u_r * np.cos(theta) - u_t * np.sin(theta),
                u_r * np.sin(theta) + u_t * np.cos(theta),
            ])

        def hessian(points):
            r, theta, m, dm = polar(points)
            ddm = -gamma ** 2 * m
            u_rr = gamma * (gamma - 1.0) * r ** (gamma - 2.0) * m
            # u_r / r + u_thth / r^2 and u_rth / r - u_th / r^2
            tangential = r ** (gamma - 2.0) * (gamma * m + ddm)
            mixed = r ** (gamma - 2.0) * (gamma - 1.0) * dm
            c, s = np.cos(theta), np.sin(theta)
            u_xx = c * c * u_rr + s * s * tangential - 2.0 * s * c * mixed
            u_yy = s * s * u_rr + c * c * tangential + 2.0 * s * c * mixed
            u_xy = s * c * (u_rr - tangential) + (c * c - s * s) * mixed
            return np.stack([np.column_stack([u_xx, u_xy]), np.column_stack([u_xy, u_yy])], axis=1)

        return u, grad, hessian

    return {i: sector(i) for i in range(4)}


def _kellogg(gamma=0.5):
    try:
        gamma = float(gamma)
    except (TypeError, ValueError) as err:
        raise InvalidParams("gamma must be a number, got {!r}".format(gamma)) from err
    R, mu = kellogg_constants(gamma)
    bounds = (-1.0, 1.0, -1.0, 1.0)
    problem = ProblemSpec(
        "kellogg",
        lambda n=2: rectangle_mesh(n, n, bounds, subdomain_of=_quadrant),
        {0: R, 1: 1.0, 2: R, 3: 1.0},
        _zero,
        None,
        _quadrant,
        _kellogg_pieces(gamma, mu),
        bounds,
        singular_points=[(0.0, 0.0)],
        regularity=lambda mesh: _low_near_origin(mesh, gamma),
        interfaces=[((0.0, 0.0), (1.0, 0.0)), ((0.0, 0.0), (0.0, 1.0)),
                    ((0.0, 0.0), (-1.0, 0.0)), ((0.0, 0.0), (0.0, -1.0))],
        params={"gamma": gamma, "jump_ratio": R},
    )
    problem.g = problem.exact_u
    return problem


def _low_near_origin(mesh, gamma):
    s = np.full(mesh.n_triangles, np.inf)
    s[mesh.triangles_touching((0.0, 0.0))] = gamma
    return s


_FACTORIES = {
    "smooth": (_smooth, ()),
    "interface_smooth": (_interface_smooth, ("jump_ratio",)),
    "kellogg": (_kellogg, ("gamma",)),
}


def get_problem(name, **params):
    """
    Benchmark by name.

    Parameters
    ----------
    name : {"smooth", "interface_smooth", "kellogg"}
    params
        jump_ratio (interface_smooth), gamma (kellogg). Parameters not used by the problem are rejected.
    """
    if name not in _FACTORIES:
        raise UnknownProblem("Unknown problem {!r}, expected one of {}".format(name, PROBLEMS))
    factory, accepted = _FACTORIES[name]
    unexpected = sorted(set(params) - set(accepted))
    if unexpected:
        raise InvalidParams("Problem {} does not take parameter(s) {}".format(name, unexpected))
    problem = factory(**params)
    logger.debug("Loaded %r", problem)
    return problem


def classify_elements(mesh, problem):
    """ Masks of T_low (0 < s_K < 1) and T_high (the rest). """
    s = problem.regularity(mesh)
    low = (s > 0) & (s < 1)
    return low, ~low


def verify_problem(problem, n_samples=200, seed=None, margin=0.05):
    """
    Spot-check the exact solution of a benchmark at random points.

    Checks sigma = -alpha grad u, the PDE residual |-alpha lap u - f| away from interfaces and singular points, and
    continuity of u and of the normal flux across every interface segment.

    Returns
    -------
    dict
        Maximum errors: flux_identity, pde_residual, continuity_u, continuity_flux.
    """
    rng = check_random_state(seed)
    x0, x1, y0, y1 = problem.bounds
    points = np.column_stack([rng.uniform(x0, x1, 4 * n_samples), rng.uniform(y0, y1, 4 * n_samples)])
    keep = np.ones(len(points), dtype=bool)
    for point in problem.singular_points:
        keep &= np.linalg.norm(points - np.asarray(point), axis=1) > margin
    for a, b in problem.interfaces:
        keep &= _distance_to_segment(points, a, b) > 1e-3
    points = points[keep][:n_samples]

    alpha = problem.alpha_at(points)
    sigma = problem.exact_sigma(points)
    grad = problem.exact_grad_u(points)
    scale = max(1.0, float(np.abs(sigma).max()))
    flux_identity = float(np.abs(sigma + alpha[:, None] * grad).max()) / scale

    laplacian = np.trace(problem.exact_hessian(points), axis1=1, axis2=2)
    load = problem.f(points)
    residual = np.abs(-alpha * laplacian - load)
    pde_residual = float(residual.max()) / max(1.0, float(np.abs(load).max()))

    continuity_u = 0.0
    continuity_flux = 0.0
    for a, b in problem.interfaces:
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        t = rng.uniform(margin, 1.0, n_samples)
        on = a[None, :] + t[:, None] * (b - a)[None, :]
        tangent = (b - a) / np.linalg.norm(b - a)
        normal = np.array([tangent[1], -tangent[0]])
        sides = problem.subdomain_of(np.vstack([on + 1e-3 * normal, on - 1e-3 * normal]))
        plus, minus = int(sides[0]), int(sides[n_samples])
        u_plus, grad_plus = problem.pieces[plus][0](on), problem.pieces[plus][1](on)
        u_minus, grad_minus = problem.pieces[minus][0](on), problem.pieces[minus][1](on)
        continuity_u = max(continuity_u, float(np.abs(u_plus - u_minus).max()))
        flux_plus = problem.alpha_by_subdomain[plus] * grad_plus.dot(normal)
        flux_minus = problem.alpha_by_subdomain[minus] * grad_minus.dot(normal)
        continuity_flux = max(continuity_flux, float(np.abs(flux_plus - flux_minus).max()))

    report = {
        "flux_identity": flux_identity,
        "pde_residual": pde_residual,
        "continuity_u": continuity_u,
        "continuity_flux": continuity_flux,
    }
    logger.debug("Verified %r: %s", problem, report)
    return report


def _distance_to_segment(points, a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    d = b - a
    t = np.clip((points - a).dot(d) / d.dot(d), 0.0, 1.0)
    return np.linalg.norm(points - (a[None, :] + t[:, None] * d[None, :]), axis=1)

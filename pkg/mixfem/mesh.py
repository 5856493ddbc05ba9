from __future__ import absolute_import, division, print_function

import logging
import os
from collections import defaultdict

import numpy as np

from .exceptions import DegenerateTriangle, NonConformingInput, InterfaceViolation
from .utils.tools import create_missing_folders

logger = logging.getLogger(__name__)

INTERIOR = 0
DIRICHLET = 1
EDGE_CLASS_NAMES = {INTERIOR: "Interior", DIRICHLET: "Dirichlet"}

# local edge i is opposite local vertex i and runs from vertex i+1 to vertex i+2
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


def _frozen(array, dtype):
    array = np.ascontiguousarray(array, dtype=dtype)
    array.setflags(write=False)
    return array


class Mesh(object):
    """
    Conforming triangulation with full edge topology.

    Edges are stored as vertex pairs (a, b) with a < b. The global unit normal of an edge points out of the
    lower-indexed incident triangle (outward on the boundary). Triangles are counterclockwise.

    Parameters
    ----------
    vertices : array_like
        Vertex coordinates, shape (nv, 2).
    triangles : array_like
        Vertex index triples, shape (nt, 3), counterclockwise.
    subdomain_ids : array_like, optional
        Subdomain tag per triangle. Default: all zero, or read off `subdomain_of` at the centroids.
    subdomain_of : callable, optional
        Maps points of shape (n, 2) to subdomain tags. When given, every triangle is sampled at interior points and
        InterfaceViolation is raised if a subdomain boundary cuts through it or if the sampled tags disagree with explicit
        `subdomain_ids`. Without it, the interface is the set of edges between differently tagged triangles.
    """

    def __init__(self, vertices, triangles, subdomain_ids=None, subdomain_of=None):
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2 or len(vertices) < 3:
            raise ValueError("vertices must have shape (nv >= 3, 2), got {}".format(vertices.shape))
        if triangles.ndim != 2 or triangles.shape[1] != 3 or len(triangles) == 0:
            raise ValueError("triangles must have shape (nt >= 1, 3), got {}".format(triangles.shape))
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise ValueError("triangle vertex indices out of range [0, {})".format(len(vertices)))

        self.vertices = _frozen(vertices, float)
        self.triangles = _frozen(triangles, np.int64)

        self._build_geometry()
        self._build_topology()

        if subdomain_ids is None:
            if subdomain_of is not None:
                subdomain_ids = np.asarray(subdomain_of(self.centroids), dtype=np.int64)
            else:
                subdomain_ids = np.zeros(self.n_triangles, dtype=np.int64)
        subdomain_ids = np.asarray(subdomain_ids, dtype=np.int64).reshape(-1)
        if len(subdomain_ids) != self.n_triangles:
            raise ValueError("Expected {} subdomain ids, got {}".format(self.n_triangles, len(subdomain_ids)))
        if subdomain_ids.min() < 0:
            raise ValueError("subdomain ids must be >= 0")
        self.subdomain_ids = _frozen(subdomain_ids, np.int64)

        if subdomain_of is not None:
            self._check_interfaces(subdomain_of)

        e2t = self.edge_to_triangles
        interior = self.edge_class == INTERIOR
        is_interface = np.zeros(self.n_edges, dtype=bool)
        is_interface[interior] = (
            self.subdomain_ids[e2t[interior, 0]] != self.subdomain_ids[e2t[interior, 1]]
        )
        self.is_interface = _frozen(is_interface, bool)

    # ------------------------------------------------------------------
    def _build_geometry(self):
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        jac = np.stack([e1, e2], axis=2)
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]

        lengths = np.linalg.norm(p[:, LOCAL_EDGES[:, 1]] - p[:, LOCAL_EDGES[:, 0]], axis=2)
        h_K = lengths.max(axis=1)

        bad = det <= 1e-14 * h_K ** 2
        if np.any(bad):
            t = int(np.flatnonzero(bad)[0])
            raise DegenerateTriangle(
                "Triangle {} {} has non-positive area {:.3e} ({} degenerate or clockwise triangles)".format(
                    t, self.triangles[t].tolist(), 0.5 * det[t], int(bad.sum())
                )
            )

        self.jacobians = _frozen(jac, float)
        self.det = _frozen(det, float)
        self.areas = _frozen(0.5 * det, float)
        self.h_K = _frozen(h_K, float)
        self.inradii = _frozen(det / lengths.sum(axis=1), float)
        self.centroids = _frozen(p.mean(axis=1), float)

    def _build_topology(self):
        nt = self.n_triangles
        local = self.triangles[:, LOCAL_EDGES]
        pairs = np.sort(local, axis=2).reshape(-1, 2)
        edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
        inverse = np.asarray(inverse).reshape(-1)

        if np.any(counts > 2):
            e = int(np.flatnonzero(counts > 2)[0])
            raise NonConformingInput(
                "Edge {} is shared by {} triangles; a conforming mesh allows at most 2".format(
                    edges[e].tolist(), counts[e]
                )
            )

        ne = len(edges)
        owner = np.arange(3 * nt) // 3
        order = np.argsort(inverse, kind="stable")
        starts = np.searchsorted(inverse[order], np.arange(ne))
        e2t = np.full((ne, 2), -1, dtype=np.int64)
        e2t[:, 0] = owner[order[starts]]
        shared = counts == 2
        e2t[shared, 1] = owner[order[starts[shared] + 1]]

        t2e = inverse.reshape(nt, 3)
        signs = np.where(e2t[t2e, 0] == np.arange(nt)[:, None], 1.0, -1.0)

        self.edges = _frozen(edges, np.int64)
        self.edge_to_triangles = _frozen(e2t, np.int64)
        self.triangle_to_edges = _frozen(t2e, np.int64)
        self.triangle_edge_signs = _frozen(signs, float)
        # local parameterisation (vertex i+1 -> vertex i+2) runs against the global a < b direction
        self.edge_reversed = _frozen(local[:, :, 0] > local[:, :, 1], bool)
        self.edge_class = _frozen(np.where(shared, INTERIOR, DIRICHLET), np.int8)

        tangent = self.vertices[edges[:, 1]] - self.vertices[edges[:, 0]]
        h_F = np.linalg.norm(tangent, axis=1)
        normal = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / h_F[:, None]
        midpoint = 0.5 * (self.vertices[edges[:, 0]] + self.vertices[edges[:, 1]])
        outward = np.einsum("ij,ij->i", normal, midpoint - self.centroids[e2t[:, 0]])
        normal[outward < 0] *= -1.0
        self.h_F = _frozen(h_F, float)
        self.edge_normals = _frozen(normal, float)

        local_index = np.full((ne, 2), -1, dtype=np.int64)
        for i in range(3):
            first = e2t[t2e[:, i], 0] == np.arange(nt)
            local_index[t2e[first, i], 0] = i
            local_index[t2e[~first, i], 1] = i
        self.edge_local_index = _frozen(local_index, np.int64)

    def _check_interfaces(self, subdomain_of):
        p = self.vertices[self.triangles]
        samples = [self.centroids] + [0.5 * (self.centroids + p[:, i]) for i in range(3)]
        for sample in samples:
            ids = np.asarray(subdomain_of(sample), dtype=np.int64)
            bad = ids != self.subdomain_ids
            if np.any(bad):
                t = int(np.flatnonzero(bad)[0])
                raise InterfaceViolation(
                    "A subdomain interface cuts through triangle {} (tagged {}, found subdomain {} inside)".format(
                        t, self.subdomain_ids[t], ids[t]
                    )
                )

    # ------------------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def interior_edges(self):
        return np.flatnonzero(self.edge_class == INTERIOR)

    @property
    def dirichlet_edges(self):
        return np.flatnonzero(self.edge_class == DIRICHLET)

    @property
    def interface_edges(self):
        return np.flatnonzero(self.is_interface)

    def shape_regularity(self):
        """ Worst ratio h_K / inradius over all triangles. """
        return float(np.max(self.h_K / self.inradii))

    def triangles_touching(self, point, tol=1e-12):
        """ Indices of triangles having `point` as a vertex. """
        point = np.asarray(point, dtype=float)
        scale = max(1.0, float(np.abs(self.vertices).max()))
        hit = np.flatnonzero(np.linalg.norm(self.vertices - point, axis=1) <= tol * scale)
        if len(hit) == 0:
            return np.zeros(0, dtype=np.int64)
        return np.flatnonzero(np.isin(self.triangles, hit).any(axis=1))

    def summary(self):
        return {
            "n_vertices": self.n_vertices,
            "n_triangles": self.n_triangles,
            "n_edges": self.n_edges,
            "n_interior_edges": int(len(self.interior_edges)),
            "n_dirichlet_edges": int(len(self.dirichlet_edges)),
            "n_interface_edges": int(len(self.interface_edges)),
            "subdomains": sorted(int(s) for s in np.unique(self.subdomain_ids)),
            "h_min": float(self.h_K.min()),
            "h_max": float(self.h_K.max()),
            "area": float(self.areas.sum()),
            "shape_regularity": self.shape_regularity(),
        }

    def __repr__(self):
        return "Mesh(n_vertices={}, n_triangles={}, n_edges={})".format(
            self.n_vertices, self.n_triangles, self.n_edges
        )


def build_mesh(vertices, triangles, subdomain_ids=None, subdomain_of=None):
    """ Validate the input triangulation and construct its edge topology. See `Mesh`. """
    mesh = Mesh(vertices, triangles, subdomain_ids=subdomain_ids, subdomain_of=subdomain_of)
    logger.debug("Built %r", mesh)
    return mesh


def rectangle_mesh(nx, ny, bounds=(0.0, 1.0, 0.0, 1.0), subdomain_of=None):
    """
    Structured triangulation of a rectangle, each cell cut along its lower-left to upper-right diagonal.

    Parameters
    ----------
    nx, ny : int
        Number of cells per direction.
    bounds : tuple
        (x_min, x_max, y_min, y_max).
    subdomain_of : callable, optional
        Subdomain layout, see `Mesh`.
    """
    x0, x1, y0, y1 = bounds
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    v00 = (j * (nx + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return build_mesh(vertices, triangles, subdomain_of=subdomain_of)


def unit_square_mesh(subdomain_ids=None):
    """ The unit square split into two triangles along the diagonal (0,0)-(1,1). """
    vertices = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    triangles = [[0, 1, 2], [0, 2, 3]]
    return build_mesh(vertices, triangles, subdomain_ids=subdomain_ids)


# ----------------------------------------------------------------------
# refinement

class RefinementSpec(object):
    """
    Parameters
    ----------
    mode : {"uniform", "graded"}
        Red refinement into four similar children, or newest-vertex bisection graded toward `center`.
    levels : int
        Number of uniform levels, or number of graded passes.
    center : tuple
        Grading center (graded mode).
    grading_radius_factor : float
        Pass j bisects every triangle within distance factor**j of the center.
    """

    MODES = ("uniform", "graded")

    def __init__(self, mode="uniform", levels=1, center=(0.0, 0.0), grading_radius_factor=0.5):
        mode = str(mode).lower()
        if mode not in self.MODES:
            raise ValueError("Unknown refinement mode {}, expected one of {}".format(mode, self.MODES))
        if int(levels) < 1:
            raise ValueError("levels must be >= 1, got {}".format(levels))
        if mode == "graded" and not 0.0 < grading_radius_factor < 1.0:
            raise ValueError("grading_radius_factor must lie in (0, 1), got {}".format(grading_radius_factor))
        self.mode = mode
        self.levels = int(levels)
        self.center = tuple(float(c) for c in center)
        self.grading_radius_factor = float(grading_radius_factor)

    def __repr__(self):
        return "RefinementSpec(mode={!r}, levels={}, center={}, grading_radius_factor={})".format(
            self.mode, self.levels, self.center, self.grading_radius_factor
        )


def refine(mesh, spec):
    """ Refine `mesh` according to `spec`; returns a new conforming Mesh with inherited subdomain ids. """
    if spec.mode == "uniform":
        for _ in range(spec.levels):
            mesh = _red_refine(mesh)
    else:
        mesh = _longest_edge_labelling(mesh)
        center = np.asarray(spec.center)
        for j in range(1, spec.levels + 1):
            radius = spec.grading_radius_factor ** j
            marked = np.flatnonzero(_distance_to_triangles(mesh, center) <= radius)
            if len(marked) == 0:
                continue
            mesh = _newest_vertex_bisection(mesh, marked)
            logger.debug("Graded pass %s: radius %.3e, %s marked, %s triangles", j, radius, len(marked),
                         mesh.n_triangles)
    logger.debug("Refined to %r", mesh)
    return mesh


def _red_refine(mesh):
    nv = mesh.n_vertices
    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])
    v0, v1, v2 = mesh.triangles.T
    m0, m1, m2 = (nv + mesh.triangle_to_edges).T
    children = np.stack(
        [
            np.column_stack([v0, m2, m1]),
            np.column_stack([m2, v1, m0]),
            np.column_stack([m1, m0, v2]),
            np.column_stack([m0, m1, m2]),
        ],
        axis=1,
    ).reshape(-1, 3)
    return Mesh(vertices, children, subdomain_ids=np.repeat(mesh.subdomain_ids, 4))


def _longest_edge_labelling(mesh):
    """ Rotate each triangle so that its longest edge runs from local vertex 0 to local vertex 1. """
    p = mesh.vertices[mesh.triangles]
    lengths = np.linalg.norm(p[:, LOCAL_EDGES[:, 1]] - p[:, LOCAL_EDGES[:, 0]], axis=2)
    i = np.argmax(lengths, axis=1)
    rows = np.arange(mesh.n_triangles)[:, None]
    rotation = (i[:, None] + np.array([1, 2, 0])[None, :]) % 3
    return Mesh(mesh.vertices, mesh.triangles[rows, rotation], subdomain_ids=mesh.subdomain_ids)


def _distance_to_triangles(mesh, point):
    p = mesh.vertices[mesh.triangles]
    jinv = np.linalg.inv(mesh.jacobians)
    lam = np.einsum("kij,kj->ki", jinv, point[None, :] - p[:, 0])
    inside = (lam[:, 0] >= -1e-14) & (lam[:, 1] >= -1e-14) & (lam.sum(axis=1) <= 1.0 + 1e-14)

    distance = np.full(mesh.n_triangles, np.inf)
    for a, b in LOCAL_EDGES:
        seg = p[:, b] - p[:, a]
        t = np.einsum("ki,ki->k", point[None, :] - p[:, a], seg) / np.einsum("ki,ki->k", seg, seg)
        closest = p[:, a] + np.clip(t, 0.0, 1.0)[:, None] * seg
        distance = np.minimum(distance, np.linalg.norm(closest - point[None, :], axis=1))
    distance[inside] = 0.0
    return distance


def _newest_vertex_bisection(mesh, marked):
    """
    Bisect the marked triangles through the midpoint of their refinement edge (local vertices 0-1), with
    closure so the result is conforming. The new vertex becomes local vertex 2 of both children.
    """
    triangles = [tuple(int(v) for v in t) for t in mesh.triangles]

    def key(a, b):
        return (a, b) if a < b else (b, a)

    edge_triangles = defaultdict(list)
    for t, (a, b, c) in enumerate(triangles):
        for e in (key(a, b), key(b, c), key(c, a)):
            edge_triangles[e].append(t)

    marked_edges = set(key(triangles[t][0], triangles[t][1]) for t in marked)
    stack = list(marked_edges)
    while stack:
        for t in edge_triangles[stack.pop()]:
            r = key(triangles[t][0], triangles[t][1])
            if r not in marked_edges:
                marked_edges.add(r)
                stack.append(r)

    vertices = [tuple(v) for v in mesh.vertices]
    midpoint_index = {}

    def midpoint(e):
        if e not in midpoint_index:
            a, b = vertices[e[0]], vertices[e[1]]
            midpoint_index[e] = len(vertices)
            vertices.append((0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])))
        return midpoint_index[e]

    out_triangles, out_ids = [], []

    def split(tri, sid):
        a, b, c = tri
        e = key(a, b)
        if e not in marked_edges:
            out_triangles.append(tri)
            out_ids.append(sid)
            return
        m = midpoint(e)
        split((c, a, m), sid)
        split((b, c, m), sid)

    for t, tri in enumerate(triangles):
        split(tri, int(mesh.subdomain_ids[t]))

    return Mesh(np.array(vertices), np.array(out_triangles), subdomain_ids=np.array(out_ids))


# ----------------------------------------------------------------------
# node/element files

def read_mesh(filename, subdomain_of=None):
    """
    Read the plain-text node/element format: "nv nt", nv lines "x y", nt lines "i j k subdomain_id"
    (whitespace separated, 0-based).
    """
    logger.info("  Loading mesh from %s", filename)
    with open(filename) as f:
        tokens = f.read().split()
    if len(tokens) < 2:
        raise ValueError("{} is not a node/element mesh file".format(filename))
    nv, nt = int(tokens[0]), int(tokens[1])
    expected = 2 + 2 * nv + 4 * nt
    if len(tokens) < expected:
        raise ValueError("{}: expected {} values for {} vertices and {} triangles, found {}".format(
            filename, expected, nv, nt, len(tokens)))
    body = 2 + 2 * nv
    vertices = np.array(tokens[2:body], dtype=float).reshape(nv, 2)
    cells = np.array(tokens[body:expected], dtype=np.int64).reshape(nt, 4)
    return build_mesh(vertices, cells[:, :3], subdomain_ids=cells[:, 3], subdomain_of=subdomain_of)


def write_mesh(mesh, filename):
    create_missing_folders([os.path.dirname(filename)])
    with open(filename, "w") as f:
        f.write("{} {}\n".format(mesh.n_vertices, mesh.n_triangles))
        for x, y in mesh.vertices:
            f.write("{:.17g} {:.17g}\n".format(x, y))
        for (i, j, k), sid in zip(mesh.triangles, mesh.subdomain_ids):
            f.write("{} {} {} {}\n".format(i, j, k, sid))
    logger.debug("Wrote %r to %s", mesh, filename)

"""Concrete geodesic spaces.

* :class:`EuclideanSpace` -- ``R^n`` with the usual metric (CAT(0)).
* :class:`HyperboloidSpace` -- hyperbolic space of curvature -1 in the
  hyperboloid model (CAT(0)).
* :class:`TreeSpace` -- a finite metric tree (CAT(0)).
* :class:`LinfSpace` -- ``R^n`` with the max norm and linear interpolation as
  convexity mapping. W-hyperbolic but neither uniquely geodesic nor CAT(0);
  kept as a negative control.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import InvalidInputError, InvalidPointError
from .space_core import POINT_TOL, GeodesicSpace, frozen_vector


class _VectorSpace(GeodesicSpace):
    """Shared code for models whose points are coordinate vectors."""

    def __init__(self, dim, tol=POINT_TOL, box=2.0):
        super().__init__(tol)
        dim = int(dim)
        if dim < 1:
            raise InvalidInputError(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.box = float(box)

    @property
    def coord_dim(self):
        return self.dim

    def point(self, *coords):
        if len(coords) == 1 and np.ndim(coords[0]) == 1:
            coords = coords[0]
        return self.validate(coords)

    def validate(self, x):
        try:
            arr = np.asarray(x, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidPointError(f"not a coordinate vector: {x!r}") from exc
        if arr.shape != (self.coord_dim,):
            raise InvalidPointError(
                f"{self.model} point needs {self.coord_dim} coordinates, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidPointError(f"non-finite coordinates: {arr}")
        if arr.flags.writeable:
            arr = frozen_vector(arr)
        return arr

    def convex_combine(self, x, y, lam):
        if lam == 0.0:
            return x
        if lam == 1.0:
            return y
        return frozen_vector((1.0 - lam) * x + lam * y)

    def extrapolate(self, x, y, lam):
        return frozen_vector((1.0 - lam) * x + lam * y)

    def sample(self, rng, n, region=None):
        return [frozen_vector(v) for v in self.sample_rows(rng, n, region)]

    def sample_rows(self, rng, n, region=None):
        """``n`` sampled points as the rows of an array."""
        box = self.box if region is None else float(region)
        return rng.uniform(-box, box, size=(n, self.dim))

    def combine_rows(self, X, Y, lam):
        """Row-wise ``W(X_i, Y_i, lam_i)``; ``lam`` may leave ``[0, 1]`` (geodesic extension)."""
        lam = np.asarray(lam, dtype=float).reshape(-1, 1)
        return (1.0 - lam) * X + lam * Y

    def describe(self):
        return {"model": self.model, "dim": self.dim}

    def point_to_json(self, x):
        return {"model": self.model, "coords": [float(c) for c in x]}

    def point_from_json(self, obj):
        if isinstance(obj, dict):
            if obj.get("model", self.model) != self.model:
                raise InvalidPointError(f"point model {obj.get('model')!r} != {self.model!r}")
            obj = obj.get("coords")
        return self.validate(obj)


class EuclideanSpace(_VectorSpace):
    model = "euclidean"
    cat0 = True
    uniquely_geodesic = True

    def distance(self, x, y):
        diff = x - y
        return math.sqrt(float(diff @ diff))

    def distance_rows(self, X, Y):
        return np.sqrt(np.sum((X - Y) ** 2, axis=1))

    def sample_near(self, rng, center, radius):
        direction = rng.normal(size=self.dim)
        direction /= np.linalg.norm(direction)
        r = radius * rng.uniform() ** (1.0 / self.dim)
        return frozen_vector(center + r * direction)


class LinfSpace(_VectorSpace):
    model = "linf"
    cat0 = False
    uniquely_geodesic = False

    def distance(self, x, y):
        return float(np.max(np.abs(x - y)))

    def distance_rows(self, X, Y):
        return np.max(np.abs(X - Y), axis=1)

    def sample_near(self, rng, center, radius):
        return frozen_vector(center + rng.uniform(-radius, radius, size=self.dim))


# Below this distance acosh(B) has lost too many digits; switch to the
# Minkowski norm of the difference vector.
_HYP_SMALL = 1e-4


class HyperboloidSpace(_VectorSpace):
    """Hyperbolic space ``H^n`` on the upper sheet ``x0^2 - |x|^2 = 1``.

    Points carry ``n + 1`` Minkowski coordinates. ``box`` is the radius cap
    (distance from the base point ``(1, 0, ..., 0)``) of the sampling region.
    """

    model = "hyperboloid"
    cat0 = True
    uniquely_geodesic = True

    def __init__(self, dim=2, tol=POINT_TOL, box=2.0):
        super().__init__(dim, tol, box)

    @property
    def coord_dim(self):
        return self.dim + 1

    @property
    def origin(self):
        e = np.zeros(self.dim + 1)
        e[0] = 1.0
        return frozen_vector(e)

    def validate(self, x):
        arr = super().validate(x)
        if arr[0] <= 0:
            raise InvalidPointError(f"hyperboloid point must have x0 > 0: {arr}")
        q = arr[0] ** 2 - float(arr[1:] @ arr[1:])
        # relative check: absolute 1e-9 is unreachable once coordinates grow
        if abs(q - 1.0) > self.tol * max(1.0, arr[0] ** 2):
            raise InvalidPointError(f"not on the hyperboloid (x0^2 - |x|^2 = {q!r}): {arr}")
        return arr

    def lift(self, spatial):
        """Point with the given spatial coordinates ``(x1, ..., xn)``."""
        v = np.asarray(spatial, dtype=float)
        return frozen_vector(np.concatenate([[math.sqrt(1.0 + float(v @ v))], v]))

    @staticmethod
    def bilinear(x, y):
        """``x0 y0 - sum_i xi yi``; equals ``cosh d(x, y)`` on the hyperboloid."""
        return float(2.0 * x[0] * y[0] - np.dot(x, y))

    def distance(self, x, y):
        d = math.acosh(max(self.bilinear(x, y), 1.0))
        if d < _HYP_SMALL:
            diff = x - y
            q = float(diff[1:] @ diff[1:] - diff[0] ** 2)
            d = 2.0 * math.asinh(0.5 * math.sqrt(max(q, 0.0)))
        return d

    def _normalize(self, z):
        z = np.array(z, dtype=float)
        z[0] = math.sqrt(1.0 + float(z[1:] @ z[1:]))
        return frozen_vector(z)

    def convex_combine(self, x, y, lam):
        if lam == 0.0:
            return x
        if lam == 1.0:
            return y
        return self.extrapolate(x, y, lam)

    def extrapolate(self, x, y, lam):
        d = self.distance(x, y)
        if d == 0.0:
            return x
        s = math.sinh(d)
        z = (math.sinh((1.0 - lam) * d) / s) * x + (math.sinh(lam * d) / s) * y
        return self._normalize(z)

    def exp(self, p, v):
        """Exponential map at ``p`` of a tangent vector ``v`` (Minkowski-orthogonal to ``p``)."""
        nv = math.sqrt(max(float(v[1:] @ v[1:] - v[0] ** 2), 0.0))
        if nv == 0.0:
            return p
        return self._normalize(math.cosh(nv) * p + (math.sinh(nv) / nv) * v)

    def tangent(self, p, spatial):
        """Tangent vector at ``p`` whose spatial part is ``spatial``."""
        w = np.asarray(spatial, dtype=float)
        return np.concatenate([[float(w @ p[1:]) / p[0]], w])

    def sample(self, rng, n, region=None):
        return [self._normalize(p) for p in self.sample_rows(rng, n, region)]

    def sample_rows(self, rng, n, region=None):
        # uniform in the tangent ball of radius ``cap`` at the base point, pushed through exp
        cap = self.box if region is None else float(region)
        u = rng.normal(size=(n, self.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = cap * rng.uniform(size=n) ** (1.0 / self.dim)
        pts = np.hstack([np.cosh(r)[:, None], np.sinh(r)[:, None] * u])
        pts[:, 0] = np.sqrt(1.0 + np.sum(pts[:, 1:] ** 2, axis=1))
        return pts

    def distance_rows(self, X, Y):
        B = 2.0 * X[:, 0] * Y[:, 0] - np.sum(X * Y, axis=1)
        d = np.arccosh(np.maximum(B, 1.0))
        small = d < _HYP_SMALL
        if np.any(small):
            diff = X[small] - Y[small]
            q = np.sum(diff[:, 1:] ** 2, axis=1) - diff[:, 0] ** 2
            d[small] = 2.0 * np.arcsinh(0.5 * np.sqrt(np.maximum(q, 0.0)))
        return d

    def combine_rows(self, X, Y, lam):
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (len(X),))
        d = self.distance_rows(X, Y)
        s = np.sinh(d)
        safe = np.where(d > 0, s, 1.0)
        a = np.where(d > 0, np.sinh((1.0 - lam) * d) / safe, 1.0)
        b = np.where(d > 0, np.sinh(lam * d) / safe, 0.0)
        Z = a[:, None] * X + b[:, None] * Y
        Z[:, 0] = np.sqrt(1.0 + np.sum(Z[:, 1:] ** 2, axis=1))
        return Z

    def sample_near(self, rng, center, radius):
        w = rng.normal(size=self.dim)
        v = self.tangent(center, w)
        nv = math.sqrt(max(float(v[1:] @ v[1:] - v[0] ** 2), 1e-300))
        r = radius * rng.uniform() ** (1.0 / self.dim)
        return self.exp(center, (r / nv) * v)

    def describe(self):
        return {"model": self.model, "dim": self.dim}


class TreePoint(NamedTuple):
    """Position on a metric tree: ``offset`` metric units from the first endpoint of ``edge``."""

    edge: int
    offset: float


class TreeSpace(GeodesicSpace):
    """Finite metric tree.

    Parameters
    ----------
    edges : sequence of (u, v, length)
        Vertex identifiers may be any hashable JSON scalar. Edge ``i`` is the
        ``i``-th entry; offsets on it are measured from ``u``.
    root : optional
        Designated root vertex (defaults to the first endpoint of edge 0).
    """

    model = "tree"
    cat0 = True
    uniquely_geodesic = True

    def __init__(self, edges, root=None, tol=POINT_TOL):
        super().__init__(tol)
        edges = [tuple(e) for e in edges]
        if not edges:
            raise InvalidInputError("a tree needs at least one edge")
        vertices = []
        index = {}
        for e in edges:
            if len(e) != 3:
                raise InvalidInputError(f"edge must be [u, v, length], got {e!r}")
            for v in e[:2]:
                if v not in index:
                    index[v] = len(vertices)
                    vertices.append(v)
        self.vertices = tuple(vertices)
        self._index = index
        ends, lengths = [], []
        for u, v, length in edges:
            length = float(length)
            if not (length > 0.0 and math.isfinite(length)):
                raise InvalidInputError(f"edge lengths must be positive, got {length}")
            if u == v:
                raise InvalidInputError(f"self-loop at vertex {u!r}")
            ends.append((index[u], index[v]))
            lengths.append(length)
        nv = len(vertices)
        if len(edges) != nv - 1:
            raise InvalidInputError("edge set contains a cycle (|E| != |V| - 1)")
        rows = [a for a, _ in ends]
        cols = [b for _, b in ends]
        graph = coo_matrix((lengths, (rows, cols)), shape=(nv, nv)).tocsr()
        ncomp, _ = connected_components(graph, directed=False)
        if ncomp != 1:
            raise InvalidInputError("tree description is disconnected")
        self._ends = tuple(ends)
        self._lengths = np.array(lengths)
        self._lengths.setflags(write=False)
        dist, pred = shortest_path(graph, directed=False, return_predecessors=True)
        self._dist = dist
        self._dlist = dist.tolist()
        self._len_list = [float(v) for v in lengths]
        self._cum = np.cumsum(lengths)
        self._pred = pred
        self._edge_of = {}
        for i, (a, b) in enumerate(ends):
            self._edge_of[(a, b)] = i
            self._edge_of[(b, a)] = i
        self.root = vertices[0] if root is None else root
        if self.root not in index:
            raise InvalidInputError(f"root {self.root!r} is not a vertex")
        self._raw_edges = [[u, v, float(length)] for u, v, length in edges]
        self._vertex_points = {}
        for vi in range(nv):
            incident = [i for i, (a, b) in enumerate(ends) if vi in (a, b)]
            e = min(incident)
            self._vertex_points[vi] = TreePoint(e, 0.0 if ends[e][0] == vi else float(lengths[e]))

    # -- structure ----------------------------------------------------
    @property
    def n_edges(self):
        return len(self._ends)

    def edge_length(self, e):
        return float(self._lengths[e])

    def edge_ends(self, e):
        """Vertex identifiers ``(u, v)`` of edge ``e``."""
        a, b = self._ends[e]
        return self.vertices[a], self.vertices[b]

    def vertex(self, v):
        """Canonical point of vertex ``v``."""
        try:
            return self._vertex_points[self._index[v]]
        except KeyError:
            raise InvalidPointError(f"unknown vertex {v!r}") from None

    def vertex_distance(self, u, v):
        return float(self._dist[self._index[u], self._index[v]])

    @property
    def diameter(self):
        return float(self._dist.max())

    def _vertex_path(self, a, b):
        """Vertex indices on the path from ``a`` to ``b``."""
        path = [b]
        while path[-1] != a:
            path.append(int(self._pred[a, path[-1]]))
        path.reverse()
        return path

    # -- points -------------------------------------------------------
    def point(self, edge, offset):
        return self.validate(TreePoint(edge, offset))

    def validate(self, x):
        try:
            e, t = x
            e = int(e)
            t = float(t)
        except (TypeError, ValueError) as exc:
            raise InvalidPointError(f"tree point must be (edge, offset), got {x!r}") from exc
        if not (0 <= e < self.n_edges):
            raise InvalidPointError(f"unknown edge {e}")
        length = self._lengths[e]
        if not math.isfinite(t) or t < -self.tol or t > length + self.tol:
            raise InvalidPointError(f"offset {t} outside [0, {length}] on edge {e}")
        return self.canonical(TreePoint(e, min(max(t, 0.0), float(length))))

    def canonical(self, p):
        """Representation-independent form: vertices map to a fixed (edge, offset)."""
        e, t = p
        length = self._lengths[e]
        if t <= self.tol:
            return self._vertex_points[self._ends[e][0]]
        if t >= length - self.tol:
            return self._vertex_points[self._ends[e][1]]
        return TreePoint(e, float(t))

    def _exits(self, p):
        e, t = p
        a, b = self._ends[e]
        return ((a, t), (b, self._len_list[e] - t))

    def distance(self, x, y):
        ex, tx = x
        ey, ty = y
        if ex == ey:
            return abs(tx - ty)
        a1, b1 = self._ends[ex]
        a2, b2 = self._ends[ey]
        sx, sy = self._len_list[ex] - tx, self._len_list[ey] - ty
        D = self._dlist
        return float(min(tx + D[a1][a2] + ty, tx + D[a1][b2] + sy,
                         sx + D[b1][a2] + ty, sx + D[b1][b2] + sy))

    def convex_combine(self, x, y, lam):
        if lam == 0.0:
            return x
        if lam == 1.0:
            return y
        return self._walk(x, y, lam * self.distance(x, y))

    def _on_edge(self, e, start_vertex, s):
        length = float(self._lengths[e])
        s = min(max(s, 0.0), length)
        off = s if self._ends[e][0] == start_vertex else length - s
        return self.canonical(TreePoint(e, off))

    def _walk(self, x, y, s):
        """Point at distance ``s`` from ``x`` on the geodesic towards ``y``."""
        if x[0] == y[0]:
            e, t = x
            step = s if y[1] >= t else -s
            return self.canonical(TreePoint(e, t + step))
        best = None
        for a, da in self._exits(x):
            for b, db in self._exits(y):
                d = da + self._dlist[a][b] + db
                if best is None or d < best[0]:
                    best = (d, a, da, b)
        _, a, da, b = best
        e1 = x[0]
        if s <= da:
            return self._on_edge(e1, a, da - s)
        s -= da
        path = self._vertex_path(a, b)
        for v, w in zip(path[:-1], path[1:]):
            e = self._edge_of[(v, w)]
            length = float(self._lengths[e])
            if s <= length:
                return self._on_edge(e, v, s)
            s -= length
        return self._on_edge(y[0], b, s)

    def sample(self, rng, n, region=None):
        # uniform with respect to length measure
        u = rng.uniform(size=n) * self._cum[-1]
        edges = np.minimum(np.searchsorted(self._cum, u, side="right"), self.n_edges - 1)
        starts = self._cum[edges] - self._lengths[edges]
        offs = np.clip(u - starts, 0.0, self._lengths[edges])
        return [self.canonical(TreePoint(int(e), float(t))) for e, t in zip(edges, offs)]

    def sample_near(self, rng, center, radius):
        q = self.sample(rng, 1)[0]
        dq = self.distance(center, q)
        if dq == 0.0:
            return center
        s = rng.uniform(0.0, radius)
        return self.convex_combine(center, q, min(1.0, s / dq))

    def describe(self):
        return {"model": self.model, "tree": {"edges": [list(e) for e in self._raw_edges], "root": self.root}}

    def point_to_json(self, x):
        return {"edge": int(x[0]), "offset": float(x[1])}

    def point_from_json(self, obj):
        if isinstance(obj, dict):
            if "vertex" in obj:
                return self.vertex(obj["vertex"])
            return self.validate((obj["edge"], obj["offset"]))
        return self.validate(obj)


_MODELS = {
    "euclidean": EuclideanSpace,
    "linf": LinfSpace,
    "hyperboloid": HyperboloidSpace,
}


def make_space(description):
    """Build a space from its JSON descriptor.

    >>> space = make_space({"model": "euclidean", "dim": 2})
    >>> space.distance(space.validate([0, 0]), space.validate([3, 4]))
    5.0
    """
    if isinstance(description, GeodesicSpace):
        return description
    if not isinstance(description, dict) or "model" not in description:
        raise InvalidInputError(f"space descriptor must be an object with a 'model' key: {description!r}")
    model = description["model"]
    tol = description.get("tol", POINT_TOL)
    if model == "tree":
        tree = description.get("tree")
        if not isinstance(tree, dict) or "edges" not in tree:
            raise InvalidInputError("tree descriptor needs {'tree': {'edges': [[u, v, length], ...]}}")
        return TreeSpace(tree["edges"], root=tree.get("root"), tol=tol)
    if model not in _MODELS:
        raise InvalidInputError(f"unknown model {model!r}")
    dim = description.get("dim", 2)
    kwargs = {"tol": tol}
    if "box" in description:
        kwargs["box"] = description["box"]
    return _MODELS[model](dim, **kwargs)


def tripod(leg=1.0):
    """Star tree with centre ``"o"`` and three legs to leaves ``"a"``, ``"b"``, ``"c"``."""
    return TreeSpace([["o", "a", leg], ["o", "b", leg], ["o", "c", leg]])

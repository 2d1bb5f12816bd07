"""Closed convex subsets of model spaces and metric projection onto them."""

import math

import numpy as np

from .errors import InvalidInputError
from .model_spaces import EuclideanSpace, HyperboloidSpace, TreePoint, TreeSpace
from .space_core import frozen_vector

#: Default membership tolerance for ``contains``.
MEMBERSHIP_TOL = 1e-7


class ConvexSet:
    """Base class. Subclasses implement ``distance_to``, ``_project`` and ``sample``."""

    kind = "abstract"

    def __init__(self, space):
        self.space = space

    def distance_to(self, x):
        raise NotImplementedError

    def contains(self, x, tol=MEMBERSHIP_TOL):
        return self.distance_to(self.space.validate(x)) <= tol

    def project(self, x):
        """Nearest point of the set to ``x`` (CAT(0) spaces only)."""
        if not self.space.cat0:
            raise InvalidInputError(
                f"projection is not supported on the {self.space.model} space "
                "(closed convex sets need not be Chebyshev there)")
        return self._project(self.space.validate(x))

    def _project(self, x):
        raise NotImplementedError

    def sample(self, rng, n):
        raise NotImplementedError

    def diameter(self):
        """Upper bound on the diameter (``inf`` for unbounded sets)."""
        return math.inf

    def to_json(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_json()!r})"


class WholeSpace(ConvexSet):
    kind = "whole"

    def distance_to(self, x):
        return 0.0

    def contains(self, x, tol=MEMBERSHIP_TOL):
        self.space.validate(x)
        return True

    def _project(self, x):
        return x

    def sample(self, rng, n):
        return self.space.sample(rng, n)

    def diameter(self):
        if isinstance(self.space, TreeSpace):
            return self.space.diameter
        return math.inf

    def to_json(self):
        return {"kind": "whole"}


class Ball(ConvexSet):
    """Closed ball ``{y : d(y, center) <= radius}``."""

    kind = "ball"

    def __init__(self, space, center, radius):
        super().__init__(space)
        self.center = space.validate(center)
        self.radius = float(radius)
        if not self.radius > 0:
            raise InvalidInputError(f"ball radius must be positive, got {radius}")

    def distance_to(self, x):
        return max(0.0, self.space.distance(x, self.center) - self.radius)

    def _project(self, x):
        d = self.space.distance(self.center, x)
        if d <= self.radius:
            return x
        return self.space.convex_combine(self.center, x, self.radius / d)

    def sample(self, rng, n):
        return [self.space.sample_near(rng, self.center, self.radius) for _ in range(n)]

    def diameter(self):
        return 2.0 * self.radius

    def to_json(self):
        return {"kind": "ball", "center": self.space.point_to_json(self.center), "radius": self.radius}


class Segment(ConvexSet):
    """Geodesic segment ``[a, b]``; ``a == b`` gives a singleton."""

    kind = "segment"

    def __init__(self, space, a, b):
        super().__init__(space)
        self.a = space.validate(a)
        self.b = space.validate(b)
        self.length = space.distance(self.a, self.b)

    def _parameter(self, x):
        """Geodesic parameter in [0, 1] of the nearest point (or of a minimizer on non-CAT(0) spaces)."""
        sp, a, b, length = self.space, self.a, self.b, self.length
        if length == 0.0:
            return 0.0
        if isinstance(sp, EuclideanSpace):
            u = b - a
            t = float((x - a) @ u) / float(u @ u)
        elif isinstance(sp, TreeSpace):
            # Gromov product: distance from a to the branch point of the tripod (a, b, x)
            s = 0.5 * (sp.distance(a, x) + length - sp.distance(b, x))
            t = s / length
        elif isinstance(sp, HyperboloidSpace):
            # unit tangent at a towards b; minimize cosh d(x, gamma(s)) = A cosh s + B sinh s
            u = (b - math.cosh(length) * a) / math.sinh(length)
            A = sp.bilinear(x, a)
            B = sp.bilinear(x, u)
            ratio = min(max(-B / A, -1.0 + 1e-16), 1.0 - 1e-16)
            t = math.atanh(ratio) / length
        else:
            t = _golden_section(lambda s: sp.distance(x, sp.convex_combine(a, b, s)), 0.0, 1.0)
        return min(max(t, 0.0), 1.0)

    def distance_to(self, x):
        t = self._parameter(x)
        return self.space.distance(x, self.space.convex_combine(self.a, self.b, t))

    def _project(self, x):
        return self.space.convex_combine(self.a, self.b, self._parameter(x))

    def sample(self, rng, n):
        return [self.space.convex_combine(self.a, self.b, float(t)) for t in rng.uniform(size=n)]

    def diameter(self):
        return self.length

    def to_json(self):
        return {"kind": "segment", "endpoints": [self.space.point_to_json(self.a), self.space.point_to_json(self.b)]}


class Halfspace(ConvexSet):
    """``{y : <normal, y> <= offset}`` in Euclidean space."""

    kind = "halfspace"

    def __init__(self, space, normal, offset):
        if not isinstance(space, EuclideanSpace):
            raise InvalidInputError("halfspaces are only defined in Euclidean space")
        super().__init__(space)
        self.normal = frozen_vector(normal)
        if self.normal.shape != (space.dim,) or not np.any(self.normal):
            raise InvalidInputError("halfspace normal must be a nonzero vector of the space's dimension")
        self.offset = float(offset)
        self._norm = float(np.linalg.norm(self.normal))

    def distance_to(self, x):
        return max(0.0, (float(self.normal @ x) - self.offset) / self._norm)

    def _project(self, x):
        excess = float(self.normal @ x) - self.offset
        if excess <= 0:
            return x
        return frozen_vector(x - (excess / self._norm ** 2) * self.normal)

    def sample(self, rng, n):
        return [self._project(p) for p in self.space.sample(rng, n)]

    def to_json(self):
        return {"kind": "halfspace", "normal": [float(c) for c in self.normal], "offset": self.offset}


class Subtree(ConvexSet):
    """Union of the tree edges whose endpoints both lie in ``vertices``."""

    kind = "subtree"

    def __init__(self, space, vertices):
        if not isinstance(space, TreeSpace):
            raise InvalidInputError("subtrees are only defined on metric trees")
        super().__init__(space)
        vertices = list(dict.fromkeys(vertices))
        if not vertices:
            raise InvalidInputError("subtree needs at least one vertex")
        for v in vertices:
            space.vertex(v)
        self.vertices = tuple(vertices)
        vs = set(vertices)
        self._edges = tuple(e for e in range(space.n_edges) if set(space.edge_ends(e)) <= vs)
        # connected iff the induced subgraph is a tree on these vertices
        if len(self._edges) != len(vertices) - 1:
            raise InvalidInputError(f"vertex set {vertices!r} does not induce a connected subtree")
        self._points = [space.vertex(v) for v in vertices]

    def distance_to(self, x):
        if x[0] in self._edges:
            return 0.0
        return min(self.space.distance(x, p) for p in self._points)

    def _project(self, x):
        if x[0] in self._edges:
            return x
        # the nearest point of a union of whole edges is one of its vertices
        return min(self._points, key=lambda p: self.space.distance(x, p))

    def sample(self, rng, n):
        if not self._edges:
            return [self._points[0]] * n
        lengths = np.array([self.space.edge_length(e) for e in self._edges])
        picks = rng.choice(len(self._edges), size=n, p=lengths / lengths.sum())
        offs = rng.uniform(size=n)
        return [self.space.canonical(TreePoint(self._edges[i], float(u * lengths[i]))) for i, u in zip(picks, offs)]

    def diameter(self):
        return max(self.space.vertex_distance(u, v) for u in self.vertices for v in self.vertices)

    def to_json(self):
        return {"kind": "subtree", "vertices": list(self.vertices)}


def _golden_section(f, lo, hi, xtol=1e-12, maxiter=200):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns the best abscissa seen."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    best = min((f(lo), lo), (f(hi), hi), (fc, c), (fd, d))
    for _ in range(maxiter):
        if b - a <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
            best = min(best, (fd, d))
    return best[1]


golden_section = _golden_section


def contains(convex_set, x, tol=MEMBERSHIP_TOL):
    """Whether ``x`` is within ``tol`` of the set."""
    return convex_set.contains(x, tol)


def project(convex_set, x):
    """Metric projection of ``x`` onto the set."""
    return convex_set.project(x)


def make_set(space, obj):
    """Parse a set descriptor such as ``{"kind": "ball", "center": ..., "radius": r}``."""
    if isinstance(obj, ConvexSet):
        return obj
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidInputError(f"set descriptor must have a 'kind': {obj!r}")
    kind = obj["kind"]
    pt = space.point_from_json
    try:
        if kind == "ball":
            return Ball(space, pt(obj["center"]), obj["radius"])
        if kind == "segment":
            a, b = obj["endpoints"]
            return Segment(space, pt(a), pt(b))
        if kind == "point":
            p = pt(obj["point"])
            return Segment(space, p, p)
        if kind == "halfspace":
            return Halfspace(space, obj["normal"], obj["offset"])
        if kind == "subtree":
            return Subtree(space, obj["vertices"])
        if kind == "whole":
            return WholeSpace(space)
    except KeyError as exc:
        raise InvalidInputError(f"set descriptor {obj!r} is missing {exc}") from None
    raise InvalidInputError(f"unknown set kind {kind!r}")

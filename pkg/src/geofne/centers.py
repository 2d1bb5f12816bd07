"""Asymptotic radii and centers of finite windows, and a Delta-convergence diagnostic.

The limsup in the definition of the asymptotic radius is replaced by a maximum
over a tail window of the sequence. Centers minimize that maximum over a
closed convex set; uniqueness holds in CAT(0) spaces, so non-CAT(0) spaces are
rejected.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .convex_sets import Ball, Halfspace, Segment, Subtree, WholeSpace, golden_section
from .errors import InvalidInputError, NonconvergenceError
from .model_spaces import EuclideanSpace, HyperboloidSpace, TreePoint, TreeSpace

FINITE_NOTE = ("finite diagnostic: centers are computed on the listed windows and strided "
               "sub-windows only, not on every subsequence")


@dataclass(frozen=True)
class SequenceWindow:
    """Tail segment ``points[start:stop:stride]`` of a bounded sequence."""

    points: tuple
    start: int = 0
    stop: int = None
    stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.selected():
            raise InvalidInputError("window is empty")

    def selected(self):
        return self.points[self.start:self.stop:self.stride]

    def policy(self):
        return {"start": self.start, "stop": self.stop, "stride": self.stride}


@dataclass
class CenterResult:
    center: object
    radius: float
    residual: float


def _points(window):
    pts = window.selected() if isinstance(window, SequenceWindow) else list(window)
    if not pts:
        raise InvalidInputError("window is empty")
    return pts


def asymptotic_radius(space, window, y):
    """``max`` over the window of ``d(y, x_n)``."""
    pts = _points(window)
    y = space.validate(y)
    return max(space.distance(y, p) for p in pts)


def _radius(space, pts, y):
    # the farthest point by the vectorized distance, re-measured exactly
    d = _dist_array(space, y, pts)
    near_max = np.flatnonzero(d >= d.max() - 1e-9)
    return max(space.distance(y, pts[i]) for i in near_max)


def _dist_array(space, y, pts):
    if isinstance(space, EuclideanSpace):
        return np.linalg.norm(np.asarray(pts) - y, axis=1)
    if isinstance(space, HyperboloidSpace):
        P = np.asarray(pts)
        return np.arccosh(np.maximum(P[:, 0] * y[0] - P[:, 1:] @ y[1:], 1.0))
    return np.array([space.distance(y, p) for p in pts])


def _dedupe(space, pts):
    if isinstance(space, (EuclideanSpace, HyperboloidSpace)):
        _, idx = np.unique(np.asarray(pts), axis=0, return_index=True)
        return [pts[i] for i in sorted(idx)]
    uniq = []
    for p in pts:
        if all(space.distance(p, q) > 1e-15 for q in uniq[-64:]):
            uniq.append(p)
    return uniq


def _descent_start(space, pts, C, iters=200):
    """Geodesic descent towards the farthest point with steps ``1/(k+1)``, projected into ``C``."""
    y = C.project(pts[0])
    for k in range(1, iters + 1):
        far = pts[int(np.argmax(_dist_array(space, y, pts)))]
        y = C.project(space.convex_combine(y, far, 1.0 / (k + 1)))
    return y


def _eucl_polish(space, pts, C, start):
    P = np.array(pts, dtype=float)
    dim = space.dim
    if isinstance(C, Segment):
        return None
    cons = [{"type": "ineq", "fun": lambda z: z[-1] - np.sum((P - z[:-1]) ** 2, axis=1),
             "jac": lambda z: np.hstack([2.0 * (P - z[:-1]), np.ones((len(P), 1))])}]
    if isinstance(C, Ball):
        c, r2 = np.asarray(C.center), C.radius ** 2
        cons.append({"type": "ineq", "fun": lambda z: r2 - np.sum((z[:-1] - c) ** 2),
                     "jac": lambda z: np.append(-2.0 * (z[:-1] - c), 0.0)})
    elif isinstance(C, Halfspace):
        nrm, off = np.asarray(C.normal), C.offset
        cons.append({"type": "ineq", "fun": lambda z: off - nrm @ z[:-1],
                     "jac": lambda z: np.append(-nrm, 0.0)})
    elif not isinstance(C, WholeSpace):
        return None
    y0 = np.asarray(start, dtype=float)
    z0 = np.append(y0, np.max(np.sum((P - y0) ** 2, axis=1)))
    res = minimize(lambda z: z[-1], z0, jac=lambda z: np.eye(dim + 1)[-1], constraints=cons,
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    return C.project(space.validate(res.x[:-1]))


def _hyp_polish(space, pts, C, start):
    # cosh d(y, p) = B(y, p) is convex in the spatial coordinates of y
    P = np.array(pts, dtype=float)
    dim = space.dim
    if not isinstance(C, (WholeSpace, Ball)):
        return None

    def lift(ys):
        return math.sqrt(1.0 + float(ys @ ys))

    def bvals(ys):
        return lift(ys) * P[:, 0] - P[:, 1:] @ ys

    def bjac(ys):
        return np.outer(P[:, 0], ys / lift(ys)) - P[:, 1:]

    cons = [{"type": "ineq", "fun": lambda z: z[-1] - bvals(z[:-1]),
             "jac": lambda z: np.hstack([-bjac(z[:-1]), np.ones((len(P), 1))])}]
    if isinstance(C, Ball):
        c, ch = np.asarray(C.center), math.cosh(C.radius)
        cons.append({"type": "ineq", "fun": lambda z: ch - (lift(z[:-1]) * c[0] - c[1:] @ z[:-1]),
                     "jac": lambda z: np.append(-(c[0] * z[:-1] / lift(z[:-1]) - c[1:]), 0.0)})
    y0 = np.asarray(start[1:], dtype=float)
    z0 = np.append(y0, np.max(bvals(y0)))
    res = minimize(lambda z: z[-1], z0, jac=lambda z: np.eye(dim + 1)[-1], constraints=cons,
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    return C.project(space.lift(res.x[:-1]))


def _segment_center(space, pts, C):
    def f(s):
        return float(np.max(_dist_array(space, space.convex_combine(C.a, C.b, s), pts)))

    return space.convex_combine(C.a, C.b, golden_section(f, 0.0, 1.0, xtol=1e-13))


def _tree_center(space, pts, C):
    # max of distances is 1-Lipschitz, so the penalty 2 d(., C) is exact
    def f(y):
        return max(space.distance(y, p) for p in pts) + 2.0 * C.distance_to(y)

    best = None
    for e in range(space.n_edges):
        length = space.edge_length(e)
        t = golden_section(lambda s: f(space.canonical(TreePoint(e, s))), 0.0, length, xtol=1e-13)
        y = space.canonical(TreePoint(e, t))
        v = f(y)
        if best is None or v < best[0]:
            best = (v, y)
    return C.project(best[1])


def _solve(space, pts, C, start):
    if isinstance(C, Segment):
        return _segment_center(space, pts, C)
    if isinstance(space, TreeSpace):
        return _tree_center(space, pts, C)
    y = None
    if isinstance(space, EuclideanSpace):
        y = _eucl_polish(space, pts, C, start)
    elif isinstance(space, HyperboloidSpace):
        y = _hyp_polish(space, pts, C, start)
    if y is None:
        raise InvalidInputError(f"no center solver for {type(C).__name__} in {space.model} space")
    return y


def asymptotic_center(space, window, C=None, tol=1e-8, perturbation=1e-3, seed=0):
    """Center and radius of the window with respect to the convex set ``C``.

    The solve is repeated from a perturbed start; ``residual`` is the distance
    between the two answers (the uniqueness check) and must not exceed ``10 tol``.
    """
    if not space.cat0:
        raise InvalidInputError(f"asymptotic centers need a CAT(0) space; {space.model} is not")
    C = WholeSpace(space) if C is None else C
    pts = _dedupe(space, [space.validate(p) for p in _points(window)])
    start = _descent_start(space, pts, C)
    c1 = _solve(space, pts, C, start)
    c1 = min((c1, start), key=lambda y: _radius(space, pts, y))
    rng = np.random.default_rng(seed)
    alt = C.project(space.sample_near(rng, start, perturbation)) if not isinstance(space, TreeSpace) else start
    c2 = _solve(space, pts, C, alt)
    residual = space.distance(c1, c2)
    radius = _radius(space, pts, c1)
    if residual > 10.0 * tol and _radius(space, pts, c2) < radius - tol:
        raise NonconvergenceError("center solver disagrees with itself", best=c1, residual=residual)
    return CenterResult(c1, radius, residual)


# -- Delta-convergence diagnostic ----------------------------------------------------


def default_windows(n_points):
    """Half tail, last quarter, and strides 2 and 3 of the half tail."""
    half = n_points // 2
    return [
        {"start": half, "stop": None, "stride": 1},
        {"start": n_points - max(n_points // 4, 1), "stop": None, "stride": 1},
        {"start": half, "stop": None, "stride": 2},
        {"start": half + 1, "stop": None, "stride": 3},
    ]


@dataclass
class DeltaReport:
    windows: list
    centers: list
    spread: float
    residual: float
    consistent: bool
    space: object = None

    @property
    def verdict(self):
        return "CONSISTENT" if self.consistent else "NOT CONSISTENT"

    def to_json(self):
        return {
            "windows": self.windows,
            "centers": [self.space.point_to_json(c) for c in self.centers],
            "spread": self.spread,
            "residual": self.residual,
            "verdict": self.verdict,
            "note": FINITE_NOTE,
        }


def delta_convergence_diagnostic(trace, C=None, windows=None, tol=1e-6, T=None):
    """Compare asymptotic centers over several windows of a trace.

    CONSISTENT iff all centers lie within ``tol`` of each other and the first
    center moves by at most ``tol`` under ``T`` (defaults to the trace's operator).
    """
    space = trace.space
    pts = list(trace.points)
    windows = default_windows(len(pts)) if windows is None else windows
    if not windows:
        raise InvalidInputError("need at least one window")
    T = T if T is not None else getattr(trace, "operator", None)
    centers = []
    for w in windows:
        if isinstance(w, (tuple, list)):
            w = {"start": w[0], "stop": w[1], "stride": w[2] if len(w) > 2 else 1}
        win = SequenceWindow(pts, w.get("start", 0), w.get("stop"), w.get("stride", 1))
        centers.append(asymptotic_center(space, win, C, tol=tol).center)
    spread = max((space.distance(a, b) for a, b in itertools.combinations(centers, 2)), default=0.0)
    residual = math.inf
    if T is not None and T.in_domain(centers[0]):
        residual = space.distance(centers[0], T.apply(centers[0]))
    ok = spread <= tol and residual <= tol
    wins = [dict(w) if isinstance(w, dict) else {"start": w[0], "stop": w[1], "stride": w[2] if len(w) > 2 else 1}
            for w in windows]
    return DeltaReport(wins, centers, spread, residual, ok, space)


__all__ = [
    "SequenceWindow", "CenterResult", "asymptotic_radius", "asymptotic_center",
    "delta_convergence_diagnostic", "DeltaReport", "default_windows", "FINITE_NOTE",
]

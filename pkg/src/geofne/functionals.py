"""Convex functionals on model spaces and their resolvents.

The resolvent of order ``mu`` sends ``x`` to the unique minimizer of
``mu * F(y) + d(x, y)**2``. Single-term functionals use exact closed forms;
weighted sums go through a generic numerical minimizer.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .convex_sets import ConvexSet, WholeSpace, golden_section, make_set
from .errors import InvalidInputError, NonconvergenceError
from .model_spaces import EuclideanSpace, HyperboloidSpace, TreePoint, TreeSpace

INF = math.inf

#: Step grid for directional derivatives, coarse to fine.
DEFAULT_T_GRID = tuple(10.0 ** -k for k in range(2, 9))


@dataclass(frozen=True)
class ResolventParams:
    """Order ``mu`` of the resolvent plus inner-solver controls."""

    mu: float
    tol: float = 1e-8
    max_iter: int = 10_000

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidInputError(f"resolvent order mu must be positive, got {self.mu}")


class ConvexFunctional:
    """Proper convex lsc functional ``F: X -> (-inf, inf]``."""

    kind = "abstract"

    def __init__(self, space):
        self.space = space

    def __call__(self, x):
        return self.value(self.space.validate(x))

    def value(self, x):
        raise NotImplementedError

    def closed_form_resolvent(self, x, mu):
        """Exact resolvent, or ``None`` when no closed form is implemented."""
        return None

    def minimizer(self):
        """A known minimizer, or ``None``."""
        return None

    def anchors(self, x):
        """Points the generic solver uses as starting candidates."""
        return []

    def to_json(self):
        raise NotImplementedError

    def __add__(self, other):
        return WeightedSum([(1.0, self), (1.0, other)])

    def __rmul__(self, w):
        return WeightedSum([(float(w), self)])

    def __repr__(self):
        return f"{type(self).__name__}({self.to_json()!r})"


class SquaredDistance(ConvexFunctional):
    """``F(y) = d(y, a)**2``."""

    kind = "sqdist"

    def __init__(self, space, point):
        super().__init__(space)
        self.point = space.validate(point)

    def value(self, x):
        return self.space.distance(x, self.point) ** 2

    def closed_form_resolvent(self, x, mu):
        return self.space.convex_combine(x, self.point, mu / (1.0 + mu))

    def minimizer(self):
        return self.point

    def anchors(self, x):
        return [self.point]

    def to_json(self):
        return {"kind": "sqdist", "point": self.space.point_to_json(self.point)}


class Distance(ConvexFunctional):
    """``F(y) = d(y, a)``."""

    kind = "dist"

    def __init__(self, space, point):
        super().__init__(space)
        self.point = space.validate(point)

    def value(self, x):
        return self.space.distance(x, self.point)

    def closed_form_resolvent(self, x, mu):
        d = self.space.distance(x, self.point)
        if d <= mu / 2.0:
            return self.point
        return self.space.convex_combine(x, self.point, (mu / 2.0) / d)

    def minimizer(self):
        return self.point

    def anchors(self, x):
        return [self.point]

    def to_json(self):
        return {"kind": "dist", "point": self.space.point_to_json(self.point)}


class Indicator(ConvexFunctional):
    """``0`` on a convex set, ``+inf`` outside (membership tolerance of the set)."""

    kind = "indicator"

    def __init__(self, space, convex_set):
        super().__init__(space)
        self.set = convex_set

    def value(self, x):
        return 0.0 if self.set.contains(x) else INF

    def closed_form_resolvent(self, x, mu):
        return self.set.project(x)

    def minimizer(self):
        if isinstance(self.set, WholeSpace):
            return None
        return self.set.project(self.set.sample(np.random.default_rng(0), 1)[0])

    def anchors(self, x):
        return [self.set.project(x)]

    def to_json(self):
        return {"kind": "indicator", "set": self.set.to_json()}


class SetDistance(ConvexFunctional):
    """``F(y) = d(y, C)``."""

    kind = "setdist"

    def __init__(self, space, convex_set):
        super().__init__(space)
        self.set = convex_set

    def value(self, x):
        return self.set.distance_to(x)

    def closed_form_resolvent(self, x, mu):
        # on [x, P_C x] the objective is mu (D - s) + s^2, minimized at s = mu / 2
        p = self.set.project(x)
        d = self.space.distance(x, p)
        if d <= mu / 2.0:
            return p
        return self.space.convex_combine(x, p, (mu / 2.0) / d)

    def minimizer(self):
        return Indicator(self.space, self.set).minimizer()

    def anchors(self, x):
        return [self.set.project(x)]

    def to_json(self):
        return {"kind": "setdist", "set": self.set.to_json()}


class WeightedSum(ConvexFunctional):
    """Nonnegative combination ``sum_i w_i F_i``; at most one indicator term."""

    kind = "sum"

    def __init__(self, terms):
        terms = [(float(w), f) for w, f in terms]
        if not terms:
            raise InvalidInputError("a sum needs at least one term")
        flat = []
        for w, f in terms:
            if w < 0 or not math.isfinite(w):
                raise InvalidInputError(f"weights must be finite and nonnegative, got {w}")
            if isinstance(f, WeightedSum):
                flat.extend((w * v, g) for v, g in f.terms)
            else:
                flat.append((w, f))
        spaces = {id(f.space) for _, f in flat}
        if len(spaces) != 1:
            raise InvalidInputError("all terms must live on the same space")
        super().__init__(flat[0][1].space)
        self.terms = tuple((w, f) for w, f in flat if w > 0 or isinstance(f, Indicator))
        if sum(isinstance(f, Indicator) for _, f in self.terms) > 1:
            raise InvalidInputError("the generic resolvent supports at most one indicator term")

    def value(self, x):
        total = 0.0
        for w, f in self.terms:
            v = f.value(x)
            if v == INF:
                return INF
            total += w * v
        return total

    @property
    def _indicator(self):
        for _, f in self.terms:
            if isinstance(f, Indicator):
                return f.set
        return None

    def closed_form_resolvent(self, x, mu):
        finite = [(w, f) for w, f in self.terms if not isinstance(f, Indicator)]
        ind = self._indicator
        if ind is None and len(finite) == 1:
            w, f = finite[0]
            return f.closed_form_resolvent(x, mu * w) if w > 0 else x
        if not finite and ind is not None:
            return ind.project(x)
        if isinstance(self.space, EuclideanSpace) and all(isinstance(f, SquaredDistance) for _, f in finite):
            # (1 + mu W) |y - m|^2 + const, minimized over the constraint set
            wsum = sum(w for w, _ in finite)
            m = (x + mu * sum(w * f.point for w, f in finite)) / (1.0 + mu * wsum)
            m = self.space.validate(m)
            return ind.project(m) if ind is not None else m
        return None

    def minimizer(self):
        known = [f.minimizer() for _, f in self.terms]
        if any(m is None for m in known):
            return None
        # only certain when every term shares the same minimizer
        first = known[0]
        if all(self.space.equal(first, m) for m in known):
            return first
        return None

    def anchors(self, x):
        out = []
        for _, f in self.terms:
            out.extend(f.anchors(x))
        return out

    def to_json(self):
        return {"kind": "sum", "terms": [{"weight": w, "f": f.to_json()} for w, f in self.terms]}


# -- resolvent -----------------------------------------------------------------


def _require_cat0(space):
    if not space.cat0:
        raise InvalidInputError(f"resolvents need a CAT(0) space; {space.model} is not")


def _as_params(params):
    if isinstance(params, ResolventParams):
        return params
    return ResolventParams(float(params))


def resolvent(F, params, x):
    """Minimizer ``J_mu(x)`` of ``mu F(y) + d(x, y)^2``.

    ``params`` is a :class:`ResolventParams` or a bare positive ``mu``.
    """
    params = _as_params(params)
    space = F.space
    _require_cat0(space)
    x = space.validate(x)
    y = F.closed_form_resolvent(x, params.mu)
    if y is not None:
        return y
    return _generic_resolvent(F, x, params)


def moreau_yosida_value(F, params, x):
    """Moreau-Yosida envelope ``inf_y mu F(y) + d(x, y)^2``."""
    params = _as_params(params)
    x = F.space.validate(x)
    y = resolvent(F, params, x)
    return params.mu * F.value(y) + F.space.distance(x, y) ** 2


def _lipschitz_bound(F, x, radius):
    """Upper bound on the Lipschitz constant of ``F`` on ``B(x, radius)``."""
    total = 0.0
    for w, f in getattr(F, "terms", ((1.0, F),)):
        if isinstance(f, SquaredDistance):
            total += w * 2.0 * (radius + F.space.distance(x, f.point))
        elif isinstance(f, (Distance, SetDistance)):
            total += w
    return total


def _generic_resolvent(F, x, params):
    """Numerical resolvent for weighted sums.

    The minimizer lies in ``B(x, R)`` with ``R^2`` the objective value at the
    best closed-form candidate. An indicator term is replaced by an exact
    penalty ``M d(., C)`` with ``M`` above the Lipschitz constant of the rest,
    which keeps the objective geodesically convex and leaves the minimizer
    unchanged.
    """
    space, mu = F.space, params.mu
    constraint = F._indicator if isinstance(F, WeightedSum) else None
    finite = [(w, f) for w, f in getattr(F, "terms", ((1.0, F),)) if not isinstance(f, Indicator)]

    def exact(y):
        v = sum(w * f.value(y) for w, f in finite)
        if constraint is not None and not constraint.contains(y):
            return INF
        return mu * v + space.distance(x, y) ** 2

    candidates = [x] + list(F.anchors(x))
    for w, f in finite:
        candidates.append(f.closed_form_resolvent(x, mu * max(w, 1e-300)))
    if constraint is not None:
        candidates = [constraint.project(c) for c in candidates]
    start = min(candidates, key=exact)
    radius = math.sqrt(exact(start)) * (1.0 + 1e-9) + 1e-12
    penalty = 0.0
    if constraint is not None:
        penalty = 2.0 * (mu * _lipschitz_bound(F, x, radius) + 2.0 * radius) + 1.0

    def objective(y):
        v = mu * sum(w * f.value(y) for w, f in finite) + space.distance(x, y) ** 2
        if penalty:
            v += penalty * constraint.distance_to(y)
        return v

    if isinstance(space, TreeSpace):
        y = _tree_minimize(space, objective, params)
    else:
        y = _ball_minimize(space, x, radius, objective, params)
    if constraint is not None:
        y = constraint.project(y)
    if not isinstance(space, TreeSpace):
        y = _gradient_polish(space, x, mu, finite, constraint, y, params)
    # keep whichever of the solver output and the best candidate is lower
    if not exact(y) <= exact(start):
        y = start
    if not math.isfinite(exact(y)):
        raise NonconvergenceError("generic resolvent produced no feasible point", best=start)
    return y


def _log(space, p, q):
    """Tangent vector at ``p`` pointing to ``q`` with length ``d(p, q)``."""
    if isinstance(space, HyperboloidSpace):
        d = space.distance(p, q)
        if d == 0.0:
            return np.zeros_like(p)
        v = q - space.bilinear(p, q) * p
        nv = math.sqrt(max(float(v[1:] @ v[1:] - v[0] ** 2), 1e-300))
        return (d / nv) * v
    return np.asarray(q, dtype=float) - p


def _exp(space, p, v):
    if isinstance(space, HyperboloidSpace):
        return space.exp(p, v)
    return space.validate(p + v)


def _gradient(space, x, mu, finite, y, kink_tol=0.0):
    """Riemannian gradient of ``mu * sum w f + d(x, .)^2`` at ``y``.

    Nonsmooth terms within ``kink_tol`` of their kink contribute the zero subgradient.
    """
    g = -2.0 * _log(space, y, x)
    for w, f in finite:
        if isinstance(f, SquaredDistance):
            g = g - 2.0 * mu * w * _log(space, y, f.point)
        elif isinstance(f, Distance):
            d = space.distance(y, f.point)
            if d > kink_tol:
                g = g - (mu * w / d) * _log(space, y, f.point)
        elif isinstance(f, SetDistance):
            p = f.set.project(y)
            d = space.distance(y, p)
            if d > kink_tol:
                g = g - (mu * w / d) * _log(space, y, p)
    return g


def _kink_maps(finite):
    """Maps onto the sets where a term is not differentiable (a point, or the set of a set-distance)."""
    maps = []
    for _, f in finite:
        if isinstance(f, Distance):
            maps.append(lambda z, p=f.point: p)
        elif isinstance(f, SetDistance):
            maps.append(f.set.project)
    return maps


def _gradient_polish(space, x, mu, finite, constraint, y, params):
    """Projected gradient steps from ``y``; refines the value-based search to near machine precision.

    Each trial point is also mapped onto the kink sets of the nonsmooth terms;
    when the minimizer sits on such a set this turns the iteration into
    projected gradient along it.
    """

    def phi(z):
        return mu * sum(w * f.value(z) for w, f in finite) + space.distance(x, z) ** 2

    def feasible(z):
        return constraint.project(z) if constraint is not None else z

    kinks = _kink_maps(finite)
    step = max_step = 0.5 / (1.0 + mu * sum(2.0 * w for w, _ in finite))
    cur = phi(y)
    scale = 1.0 + space.distance(x, y)
    for _ in range(min(params.max_iter, 2000)):
        v = -step * _gradient(space, x, mu, finite, y, kink_tol=1e-9 * scale)
        if isinstance(space, HyperboloidSpace):
            v = v * min(1.0, scale / math.sqrt(max(float(v[1:] @ v[1:] - v[0] ** 2), 1e-300)))
        z = feasible(_exp(space, y, v))
        val = phi(z)
        for k in kinks:
            zk = feasible(k(z))
            vk = phi(zk)
            if vk < val:
                z, val = zk, vk
        if val > cur + 4e-16 * (1.0 + abs(cur)):
            step *= 0.5
            if step < 1e-12:
                break
            continue
        moved = space.distance(y, z)
        y, cur = z, val
        if moved <= 1e-15 * scale:
            break
        step = min(step * 1.25, 4.0 * max_step)
    return y


def _tree_minimize(space, objective, params):
    best = None
    for e in range(space.n_edges):
        length = space.edge_length(e)

        def along(t, e=e):
            return objective(space.canonical(TreePoint(e, t)))

        t = golden_section(along, 0.0, length, xtol=min(params.tol, 1e-12) * max(1.0, length))
        val = along(t)
        if best is None or val < best[0]:
            best = (val, space.canonical(TreePoint(e, t)))
    return best[1]


def _ball_chart(space, x, radius):
    """Map from a Euclidean ball of coordinates onto ``B(x, radius)`` with straight lines as geodesics."""
    if isinstance(space, HyperboloidSpace):
        # boost sending the origin to x, composed with Klein coordinates
        x0, xs = float(x[0]), np.asarray(x[1:], dtype=float)
        boost = np.empty((len(x), len(x)))
        boost[0, 0] = x0
        boost[0, 1:] = xs
        boost[1:, 0] = xs
        boost[1:, 1:] = np.eye(len(xs)) + np.outer(xs, xs) / (1.0 + x0)

        def to_point(k):
            k = np.asarray(k, dtype=float)
            h = 1.0 / math.sqrt(max(1.0 - float(k @ k), 1e-300))
            return space._normalize(boost @ np.concatenate([[h], h * k]))

        return to_point, min(math.tanh(radius), 1.0 - 1e-15), space.dim

    def to_point(c):
        return space.validate(x + np.asarray(c, dtype=float))

    return to_point, radius, space.dim


def _ball_minimize(space, x, radius, objective, params):
    to_point, rho, dim = _ball_chart(space, x, radius)
    xtol = min(params.tol, 1e-10) * max(rho, 1e-3) * 1e-2

    def f(c):
        return objective(to_point(c))

    best_c, _ = _nested_minimize(f, np.zeros(0), rho, dim, xtol)
    return to_point(best_c)


def _nested_minimize(f, prefix, rho, dim, xtol):
    """Minimize a convex ``f`` over the coordinate ball of radius ``rho`` one axis at a time."""
    used = float(prefix @ prefix)
    half = math.sqrt(max(rho * rho - used, 0.0))
    remaining = dim - len(prefix)
    if remaining == 1:
        def g1(u):
            return f(np.append(prefix, u))
        if half == 0.0:
            u = 0.0
        else:
            u = minimize_scalar(g1, bounds=(-half, half), method="bounded", options={"xatol": xtol}).x
            u = min((u, -half, half), key=g1)
        c = np.append(prefix, u)
        return c, f(c)

    cache = {}

    def g(u):
        if u not in cache:
            cache[u] = _nested_minimize(f, np.append(prefix, u), rho, dim, xtol)
        return cache[u][1]

    if half == 0.0:
        g(0.0)
        return cache[0.0]
    u = minimize_scalar(g, bounds=(-half, half), method="bounded", options={"xatol": xtol}).x
    g(u)
    best = min(cache.values(), key=lambda cv: cv[1])
    return best


# -- derivatives and optimality -------------------------------------------------


def difference_quotients(F, x, y, t_grid=DEFAULT_T_GRID):
    """Quotients ``(F(gamma(t)) - F(x)) / t`` along the unit-speed geodesic from ``x`` to ``y``.

    Grid points beyond ``d(x, y)`` are dropped.
    """
    space = F.space
    x, y = space.validate(x), space.validate(y)
    fx = F.value(x)
    if fx == INF:
        raise InvalidInputError("directional derivative needs x in dom F")
    length = space.distance(x, y)
    if length <= space.tol:
        raise InvalidInputError("direction point must differ from x")
    ts = [t for t in t_grid if t <= length] or [length]
    out = []
    for t in ts:
        ft = F.value(space.convex_combine(x, y, t / length))
        out.append((t, INF if ft == INF else (ft - fx) / t))
    return out


def directional_derivative(F, x, y, t_grid=DEFAULT_T_GRID):
    """One-sided derivative of ``F`` at ``x`` towards ``y``.

    Returns the quotient at the finest step. For convex ``F`` quotients do not
    increase as ``t`` shrinks; a violation beyond rounding triggers a
    ``RuntimeWarning``.
    """
    q = difference_quotients(F, x, y, t_grid)
    vals = [v for _, v in q]
    finite = [v for v in vals if v != INF]
    if len(finite) == len(vals):
        scale = 1.0 + max(abs(v) for v in vals)
        slack = 1e-6 * scale
        if any(b > a + slack for a, b in zip(vals, vals[1:])):
            warnings.warn(f"non-monotone difference quotients {vals}", RuntimeWarning, stacklevel=2)
    return vals[-1]


@dataclass
class MinimizerVerdict:
    passed: bool
    min_derivative: float
    witness: object = None

    def __bool__(self):
        return self.passed


def minimizer_test(F, x, directions, tol=1e-6):
    """Check ``D F(x) >= -tol`` towards every sampled direction point."""
    directions = list(directions)
    if not directions:
        raise InvalidInputError("need at least one direction")
    worst, witness = INF, None
    for y in directions:
        dd = directional_derivative(F, x, y)
        if dd < worst:
            worst, witness = dd, y
    if worst >= -tol:
        return MinimizerVerdict(True, worst)
    return MinimizerVerdict(False, worst, witness)


# -- parsing -------------------------------------------------------------------


def make_functional(space, obj):
    """Parse ``{"kind": "sqdist", "point": ...}``, ``{"kind": "sum", "terms": [...]}``, ..."""
    if isinstance(obj, ConvexFunctional):
        return obj
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidInputError(f"functional descriptor must have a 'kind': {obj!r}")
    kind = obj["kind"]
    try:
        if kind == "sqdist":
            return SquaredDistance(space, space.point_from_json(obj["point"]))
        if kind == "dist":
            return Distance(space, space.point_from_json(obj["point"]))
        if kind == "indicator":
            return Indicator(space, make_set(space, obj["set"]))
        if kind == "setdist":
            return SetDistance(space, make_set(space, obj["set"]))
        if kind == "zero":
            return Indicator(space, WholeSpace(space))
        if kind == "sum":
            return WeightedSum([(t.get("weight", 1.0), make_functional(space, t["f"])) for t in obj["terms"]])
    except KeyError as exc:
        raise InvalidInputError(f"functional descriptor {obj!r} is missing {exc}") from None
    raise InvalidInputError(f"unknown functional kind {kind!r}")


__all__ = [
    "ConvexFunctional", "SquaredDistance", "Distance", "Indicator", "SetDistance", "WeightedSum",
    "ResolventParams", "resolvent", "moreau_yosida_value", "directional_derivative",
    "difference_quotients", "minimizer_test", "MinimizerVerdict", "make_functional",
]

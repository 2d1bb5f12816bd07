"""Self-maps of convex domains: projections, resolvents, Bruck transforms and counterexamples.

An :class:`Operator` carries its domain as a list of convex pieces (a union
when there is more than one), a flag for each property it claims, and a way to
produce known fixed points. :func:`firm_nonexpansiveness_audit` falsifies the
claims on sampled pairs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .convex_sets import Ball, ConvexSet, Halfspace, Segment, Subtree, WholeSpace, make_set
from .errors import DomainError, InvalidInputError, NonconvergenceError
from .functionals import ResolventParams, make_functional, resolvent
from .model_spaces import EuclideanSpace

DEFAULT_LAMBDA_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))
DOMAIN_TOL = 1e-7


class Operator:
    """A map ``T`` from the union of ``pieces`` into itself.

    Attributes
    ----------
    space : GeodesicSpace
    pieces : list of ConvexSet
        Domain pieces; the domain is their union.
    claims_fne : bool
        Whether ``T`` is claimed lambda-firmly nonexpansive for every lambda in (0, 1).
    claims_nonexpansive : bool
    """

    kind = "abstract"
    claims_fne = False
    claims_nonexpansive = False

    def __init__(self, space, pieces=None):
        self.space = space
        if pieces is None:
            pieces = [WholeSpace(space)]
        pieces = list(pieces)
        if not pieces:
            raise InvalidInputError("an operator needs at least one domain piece")
        for p in pieces:
            if not isinstance(p, ConvexSet) or p.space is not space:
                raise InvalidInputError("domain pieces must be convex sets of the operator's space")
        self.pieces = pieces

    def piece_index(self, x, tol=DOMAIN_TOL):
        """Index of the first domain piece containing ``x``, or ``None``."""
        for i, p in enumerate(self.pieces):
            if p.distance_to(x) <= tol:
                return i
        return None

    def in_domain(self, x, tol=DOMAIN_TOL):
        return self.piece_index(self.space.validate(x), tol) is not None

    def apply(self, x):
        x = self.space.validate(x)
        if self.piece_index(x) is None:
            raise DomainError(f"{self.kind}: point {self.space.point_to_json(x)} is outside the domain")
        return self._apply(x)

    __call__ = apply

    def _apply(self, x):
        raise NotImplementedError

    def fixed_points(self, near=None):
        """Known fixed points (possibly empty). ``near`` may pick one close to a point."""
        return []

    def domain_diameter(self):
        """Diameter bound of the domain (``inf`` if unbounded or unknown)."""
        if len(self.pieces) == 1:
            return self.pieces[0].diameter()
        return math.inf

    def sample_domain(self, rng, n):
        """``n`` points from the domain; pieces are picked uniformly."""
        if len(self.pieces) == 1:
            return self.pieces[0].sample(rng, n)
        picks = rng.integers(len(self.pieces), size=n)
        return [self.pieces[i].sample(rng, 1)[0] for i in picks]

    def _params_json(self):
        return {}

    def to_json(self):
        out = {"kind": self.kind, **self._params_json()}
        if not (len(self.pieces) == 1 and isinstance(self.pieces[0], WholeSpace)):
            out["domain"] = [p.to_json() for p in self.pieces]
        return out

    def __repr__(self):
        return f"{type(self).__name__}({self.to_json()!r})"


class Projection(Operator):
    """Metric projection onto a closed convex set (firmly nonexpansive in CAT(0) spaces)."""

    kind = "projection"
    claims_fne = True
    claims_nonexpansive = True

    def __init__(self, space, convex_set, pieces=None):
        if not space.cat0:
            raise InvalidInputError("projections are only supported on CAT(0) spaces")
        super().__init__(space, pieces)
        self.set = convex_set

    def _apply(self, x):
        return self.set.project(x)

    def fixed_points(self, near=None):
        if near is not None:
            return [self.set.project(self.space.validate(near))]
        return [_set_anchor(self.set)]

    def _params_json(self):
        return {"set": self.set.to_json()}


def _set_anchor(s):
    sp = s.space
    if isinstance(s, Ball):
        return s.center
    if isinstance(s, Segment):
        return s.a
    if isinstance(s, Subtree):
        return sp.vertex(s.vertices[0])
    if isinstance(s, Halfspace):
        return s.project(np.zeros(sp.dim))
    return s.sample(np.random.default_rng(0), 1)[0]


def identity(space, pieces=None):
    """The identity map, as the projection onto the whole space."""
    op = Projection(space, WholeSpace(space), pieces)
    return op


class Resolvent(Operator):
    """``J_mu`` of a convex functional."""

    kind = "resolvent"
    claims_fne = True
    claims_nonexpansive = True

    def __init__(self, functional, mu, pieces=None, tol=1e-8):
        super().__init__(functional.space, pieces)
        self.functional = functional
        self.params = ResolventParams(float(mu), tol=tol)
        if not functional.space.cat0:
            raise InvalidInputError("resolvents need a CAT(0) space")

    @property
    def mu(self):
        return self.params.mu

    def _apply(self, x):
        return resolvent(self.functional, self.params, x)

    def fixed_points(self, near=None):
        m = self.functional.minimizer()
        return [] if m is None else [m]

    def _params_json(self):
        return {"f": self.functional.to_json(), "mu": self.mu}


def bruck_transform(T, t, x, tol=1e-10, max_iter=100_000):
    """``U_t(x)``: the fixed point of ``y -> (1 - t) x (+) t T(y)``.

    Banach iteration from ``y = x``; stops once successive iterates are within
    ``tol (1 - t) / t``, which bounds the distance to the true fixed point by ``tol``.
    """
    t = float(t)
    if not 0.0 < t < 1.0:
        raise InvalidInputError(f"Bruck parameter t must lie in (0, 1), got {t}")
    space = T.space
    x = space.validate(x)
    if not T.in_domain(x):
        raise DomainError("Bruck transform: x is outside the domain")
    stop = tol * (1.0 - t) / t
    y = x
    for _ in range(max_iter):
        y_next = space.convex_combine(x, T.apply(y), t)
        step = space.distance(y, y_next)
        y = y_next
        if step <= stop:
            return y
    raise NonconvergenceError("Bruck iteration hit its cap", best=y, residual=step)


class Bruck(Operator):
    """``U_t`` built from a nonexpansive ``inner`` operator on a convex domain."""

    kind = "bruck"
    claims_fne = True
    claims_nonexpansive = True

    def __init__(self, inner, t, tol=1e-10):
        if len(inner.pieces) != 1:
            raise InvalidInputError("the Bruck transform needs a convex (single-piece) domain")
        if not inner.claims_nonexpansive:
            raise InvalidInputError("the Bruck transform needs a nonexpansive inner operator")
        super().__init__(inner.space, inner.pieces)
        self.inner = inner
        self.t = float(t)
        if not 0.0 < self.t < 1.0:
            raise InvalidInputError(f"Bruck parameter t must lie in (0, 1), got {t}")
        self.tol = float(tol)

    def _apply(self, x):
        return bruck_transform(self.inner, self.t, x, self.tol)

    def fixed_points(self, near=None):
        return self.inner.fixed_points(near)

    def to_json(self):
        return {"kind": "bruck", "inner": self.inner.to_json(), "t": self.t, "tol": self.tol}


class Translation(Operator):
    """``x -> x + v`` in Euclidean space: an isometry, FNE with equality, no fixed points if ``v != 0``."""

    kind = "translation"
    claims_fne = True
    claims_nonexpansive = True

    def __init__(self, space, vector):
        if not isinstance(space, EuclideanSpace):
            raise InvalidInputError("translations are only defined in Euclidean space")
        super().__init__(space)
        self.vector = space.validate(vector)

    def _apply(self, x):
        return self.space.validate(x + self.vector)

    def fixed_points(self, near=None):
        if not np.any(self.vector):
            return [self.space.validate(np.zeros(self.space.dim) if near is None else near)]
        return []

    def _params_json(self):
        return {"vector": [float(c) for c in self.vector]}


class Negation(Operator):
    """``x -> -x`` in Euclidean space: nonexpansive, never lambda-FNE."""

    kind = "negation"
    claims_nonexpansive = True

    def __init__(self, space, pieces=None):
        if not isinstance(space, EuclideanSpace):
            raise InvalidInputError("negation is only defined in Euclidean space")
        super().__init__(space, pieces)

    def _apply(self, x):
        return self.space.validate(-x)

    def fixed_points(self, near=None):
        return [self.space.validate(np.zeros(self.space.dim))]


class TwoPointSwap(Operator):
    """Exchange two points; the domain is the two singletons. Nonexpansive and fixed-point free."""

    kind = "swap"
    claims_nonexpansive = True

    def __init__(self, space, p, q):
        p, q = space.validate(p), space.validate(q)
        if space.distance(p, q) <= space.tol:
            raise InvalidInputError("two-point swap needs two distinct points")
        super().__init__(space, [Segment(space, p, p), Segment(space, q, q)])
        self.points = (p, q)

    def _apply(self, x):
        p, q = self.points
        return q if self.space.distance(x, p) <= DOMAIN_TOL else p

    def _params_json(self):
        return {"points": [self.space.point_to_json(p) for p in self.points]}

    def to_json(self):
        return {"kind": self.kind, **self._params_json()}


class Composition(Operator):
    """Apply ``ops`` in the listed order (``ops[0]`` first)."""

    kind = "composition"

    def __init__(self, ops, pieces=None):
        ops = list(ops)
        if not ops:
            raise InvalidInputError("composition needs at least one operator")
        super().__init__(ops[0].space, pieces if pieces is not None else ops[0].pieces)
        self.ops = ops
        self.claims_nonexpansive = all(o.claims_nonexpansive for o in ops)

    def _apply(self, x):
        for op in self.ops:
            x = op.apply(x)
        return x

    def _params_json(self):
        return {"ops": [o.to_json() for o in self.ops]}


def apply(T, x):
    """``T(x)``; raises :class:`~geofne.errors.DomainError` outside the domain."""
    return T.apply(x)


# -- audit -----------------------------------------------------------------------


@dataclass
class LambdaAudit:
    """Worst cases for one lambda; ratios are ``d(combined) / d(x, y)``."""

    lam: float
    max_violation: float
    nonexpansive_violation: float
    three_point_violation: float
    witness_pair: tuple
    passed: bool
    combined_ratio_min: float
    combined_ratio_max: float

    def to_json(self, space):
        wp = None if self.witness_pair is None else [space.point_to_json(p) for p in self.witness_pair]
        return {
            "lambda": self.lam,
            "max_violation": self.max_violation,
            "nonexpansive_violation": self.nonexpansive_violation,
            "three_point_violation": self.three_point_violation,
            "witness_pair": wp,
            "pass": self.passed,
            "combined_ratio_min": self.combined_ratio_min,
            "combined_ratio_max": self.combined_ratio_max,
        }


@dataclass
class AuditReport:
    operator: dict
    pairs: int
    tol: float
    results: list
    seed: object = None
    space: object = field(default=None, repr=False)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def by_lambda(self, lam):
        for r in self.results:
            if abs(r.lam - lam) < 1e-12:
                return r
        raise KeyError(lam)

    def to_json(self):
        return {
            "operator": self.operator,
            "seed": self.seed,
            "pairs": self.pairs,
            "tol": self.tol,
            "results": [r.to_json(self.space) for r in self.results],
            "pass": self.passed,
        }


def sample_pairs(T, n, seed):
    """``n`` seeded pairs of domain points; a two-point domain yields its single distinct pair."""
    rng = np.random.default_rng(seed)
    a = T.sample_domain(rng, n)
    b = T.sample_domain(rng, n)
    return list(zip(a, b))


def firm_nonexpansiveness_audit(T, lambda_grid=DEFAULT_LAMBDA_GRID, pairs=200, tol=1e-6, seed=0):
    """Falsify lambda-firm nonexpansiveness of ``T`` on sampled pairs.

    ``pairs`` is either a list of ``(x, y)`` or a count to draw with ``seed``.
    For each lambda the report holds the worst excess of ``d(Tx, Ty)`` over the
    distance of the combined points, the worst nonexpansiveness excess and the
    worst excess in the three-point inequality
    ``d(Tx, Ty) <= (1-l)/(1+l) d(x, y) + l/(1+l) (d(Tx, y) + d(x, Ty))``.
    Pairs with ``d(x, y) <= space.tol`` are skipped.
    """
    space = T.space
    if isinstance(pairs, int):
        pairs = sample_pairs(T, pairs, seed)
    else:
        seed = None
    pairs = [(space.validate(x), space.validate(y)) for x, y in pairs]
    pairs = [(x, y) for x, y in pairs if space.distance(x, y) > space.tol]
    if not pairs:
        raise InvalidInputError("audit needs at least one pair of distinct points")
    lams = [float(lam) for lam in lambda_grid]
    for lam in lams:
        if not 0.0 < lam < 1.0:
            raise InvalidInputError(f"audit lambdas must lie in (0, 1), got {lam}")

    images = [(T.apply(x), T.apply(y)) for x, y in pairs]
    d = space.distance
    results = []
    for lam in lams:
        worst = (-math.inf, None)
        ne_worst = -math.inf
        tp_worst = -math.inf
        rmin, rmax = math.inf, -math.inf
        for (x, y), (tx, ty) in zip(pairs, images):
            dxy, dt = d(x, y), d(tx, ty)
            comb = d(space.convex_combine(x, tx, lam), space.convex_combine(y, ty, lam))
            v = dt - comb
            if v > worst[0]:
                worst = (v, (x, y))
            ne_worst = max(ne_worst, dt - dxy)
            rhs = (1 - lam) / (1 + lam) * dxy + lam / (1 + lam) * (d(tx, y) + d(x, ty))
            tp_worst = max(tp_worst, dt - rhs)
            rmin = min(rmin, comb / dxy)
            rmax = max(rmax, comb / dxy)
        mv = max(worst[0], 0.0)
        passed = mv <= tol and ne_worst <= tol and tp_worst <= tol
        results.append(LambdaAudit(lam, mv, max(ne_worst, 0.0), max(tp_worst, 0.0),
                                   worst[1] if worst[0] > tol else None, passed, rmin, rmax))
    return AuditReport(T.to_json(), len(pairs), float(tol), results, seed, space)


# -- parsing ---------------------------------------------------------------------


def make_operator(space, obj):
    """Parse an operator descriptor such as ``{"kind": "resolvent", "f": ..., "mu": 1}``.

    Any kind except ``swap`` and ``bruck`` accepts ``"domain": [set, ...]``.
    """
    if isinstance(obj, Operator):
        return obj
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidInputError(f"operator descriptor must have a 'kind': {obj!r}")
    kind = obj["kind"]
    pieces = None
    if "domain" in obj:
        dom = obj["domain"]
        pieces = [make_set(space, s) for s in (dom if isinstance(dom, list) else [dom])]
    try:
        if kind == "identity":
            return identity(space, pieces)
        if kind == "projection":
            return Projection(space, make_set(space, obj["set"]), pieces)
        if kind == "resolvent":
            return Resolvent(make_functional(space, obj["f"]), obj["mu"], pieces)
        if kind == "bruck":
            return Bruck(make_operator(space, obj["inner"]), obj["t"], obj.get("tol", 1e-10))
        if kind == "translation":
            return Translation(space, obj["vector"])
        if kind == "negation":
            return Negation(space, pieces)
        if kind == "swap":
            p, q = obj["points"]
            return TwoPointSwap(space, space.point_from_json(p), space.point_from_json(q))
        if kind == "composition":
            return Composition([make_operator(space, o) for o in obj["ops"]], pieces)
    except KeyError as exc:
        raise InvalidInputError(f"operator descriptor {obj!r} is missing {exc}") from None
    raise InvalidInputError(f"unknown operator kind {kind!r}")


__all__ = [
    "Operator", "Projection", "Resolvent", "Bruck", "Translation", "Negation", "TwoPointSwap",
    "Composition", "identity", "apply", "bruck_transform", "firm_nonexpansiveness_audit",
    "sample_pairs", "AuditReport", "LambdaAudit", "make_operator", "DEFAULT_LAMBDA_GRID",
]

"""Randomized falsification of the W-hyperbolic axioms, CN-, betweenness and uniform-convexity moduli.

Reports give, per property, the worst violation found (in the inequality's own
units: squared distances for CN-, plain distances otherwise) and the sample
that produced it. A PASS means nothing was found above the tolerance.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .model_spaces import LinfSpace, TreeSpace

#: ``x, y, z, midpoint`` in the max-norm plane with ``d(z, m)^2 = 4 > 3``.
LINF_CN_WITNESS = ((1.0, 1.0), (1.0, -1.0), (-1.0, 0.0))

EPS_GRID = (0.1, 0.5, 1.0, 1.9)
R_GRID = (0.5, 1.0, 5.0)


@dataclass(frozen=True)
class Sampler:
    """Seeded sampling policy; ``region`` overrides the space's default box or radius cap."""

    seed: int = 0
    count: int = 10_000
    region: float = None

    def __post_init__(self):
        if int(self.count) < 1:
            raise InvalidInputError("sampler count must be at least 1")

    def rng(self):
        return np.random.default_rng(self.seed)

    def points(self, space, rng, n):
        return space.sample(rng, n, self.region)


@dataclass(frozen=True)
class ModulusDescriptor:
    """A modulus ``eta(r, eps)``, optionally with its factored form ``eta = eps * eta_tilde``.

    Only the power family ``eta = c * eps**p`` (independent of ``r``) is
    serializable; other callables work in-process.
    """

    eta: object
    eta_tilde: object = None
    monotone: bool = True
    name: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def factored(self):
        return self.eta_tilde is not None

    def __call__(self, r, eps):
        return self.eta(r, eps)

    def check_values(self, rs=R_GRID, eps_grid=EPS_GRID):
        """Raise unless values lie in (0, 1] and, if claimed, decrease with ``r``."""
        for eps in eps_grid:
            vals = [self.eta(r, eps) for r in sorted(rs)]
            if any(not 0.0 < v <= 1.0 for v in vals):
                raise InvalidInputError(f"modulus values must lie in (0, 1]: {vals}")
            if self.monotone and any(b > a for a, b in zip(vals, vals[1:])):
                raise InvalidInputError(f"modulus claimed monotone but increases with r: {vals}")

    def to_json(self):
        return {"name": self.name, "form": "factored" if self.factored else "full",
                "monotone": self.monotone, **self.params}


def power_modulus(c=0.125, p=2.0):
    """``eta(r, eps) = c eps**p`` with factored form ``c eps**(p - 1)``."""
    c, p = float(c), float(p)
    return ModulusDescriptor(lambda r, e: c * e ** p, lambda r, e: c * e ** (p - 1.0), True,
                             "power", {"c": c, "p": p})


def cat0_modulus():
    """``eps**2 / 8``, valid in every CAT(0) space."""
    return power_modulus(0.125, 2.0)


def make_modulus(obj):
    if isinstance(obj, ModulusDescriptor):
        return obj
    if obj is None or obj in ("cat0", {"name": "cat0"}):
        return cat0_modulus()
    if isinstance(obj, dict) and obj.get("name", "power") == "power":
        return power_modulus(obj.get("c", 0.125), obj.get("p", 2.0))
    raise InvalidInputError(f"unknown modulus descriptor {obj!r}")


# -- reports ---------------------------------------------------------------------


@dataclass
class Check:
    axiom: str
    samples: int = 0
    max_violation: float = 0.0
    witness: object = None
    tol: float = 1e-7

    def update(self, violation, witness):
        self.samples += 1
        if violation > self.max_violation:
            self.max_violation = float(violation)
            self.witness = witness

    @property
    def passed(self):
        return self.max_violation <= self.tol

    def to_json(self, space):
        w = None
        if self.witness is not None:
            w = {k: (space.point_to_json(v) if _is_point(v) else v) for k, v in self.witness.items()}
        return {"axiom": self.axiom, "samples": self.samples, "max_violation": self.max_violation,
                "witness": w, "pass": self.passed}


def _is_point(v):
    return isinstance(v, (np.ndarray, tuple)) and not isinstance(v, float)


@dataclass
class AxiomReport:
    space: object
    checks: list
    seed: int

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.axiom == name:
                return c
        raise KeyError(name)

    def names(self):
        return [c.axiom for c in self.checks]

    def to_json(self):
        return {"space": self.space.describe(), "seed": self.seed,
                "checks": [c.to_json(self.space) for c in self.checks], "pass": self.passed}


# -- axioms ----------------------------------------------------------------------


def cn_minus_violation(space, x, y, z):
    """``d(z, m)^2 - (d(z, x)^2 / 2 + d(z, y)^2 / 2 - d(x, y)^2 / 4)`` with ``m`` the midpoint."""
    d = space.distance
    m = space.convex_combine(x, y, 0.5)
    return d(z, m) ** 2 - (0.5 * d(z, x) ** 2 + 0.5 * d(z, y) ** 2 - 0.25 * d(x, y) ** 2)


def _betweenness_chain(space, rng, sampler, tries=200):
    """Points ``x, y, z, w`` with y between x and z, and z between y and w."""
    if isinstance(space, TreeSpace):
        for _ in range(tries):
            x, z, w = sampler.points(space, rng, 3)
            y = space.convex_combine(x, z, float(rng.uniform(0.05, 0.95)))
            pts = (x, y, z, w)
            dyz, dzw, dyw = space.distance(y, z), space.distance(z, w), space.distance(y, w)
            if min(dyz, dzw, space.distance(x, y)) > 1e-6 and abs(dyw - dyz - dzw) <= 1e-12 * (1 + dyw):
                return pts
        return None
    x, y = sampler.points(space, rng, 2)
    if space.distance(x, y) <= 1e-6:
        return None
    z = space.extrapolate(x, y, float(rng.uniform(1.1, 3.0)))
    w = space.extrapolate(y, z, float(rng.uniform(1.1, 3.0)))
    return x, y, z, w


def verify_space_axioms(space, sampler=None, tol=1e-7, check_cn=None, check_betweenness=None):
    """Check W1-W4 on every sample, plus CN- and betweenness where applicable.

    CN- runs when the space claims CAT(0) or ``check_cn`` forces it; on the
    max-norm plane the stored witness is also evaluated, as its own check.
    Betweenness runs on uniquely geodesic spaces unless ``check_betweenness``
    says otherwise. Coordinate models are checked in vectorized batches.
    """
    sampler = Sampler() if sampler is None else sampler
    do_cn = space.cat0 if check_cn is None else bool(check_cn)
    do_bet = space.uniquely_geodesic if check_betweenness is None else bool(check_betweenness)

    checks = {name: Check(name, tol=tol) for name in ("W1", "W2", "W3", "W4")}
    if do_cn:
        checks["CN-"] = Check("CN-", tol=tol)
        if isinstance(space, LinfSpace) and space.dim == 2:
            c = checks["CN- stored witness"] = Check("CN- stored witness", tol=tol)
            x, y, z = (space.validate(p) for p in LINF_CN_WITNESS)
            c.update(cn_minus_violation(space, x, y, z), {"x": x, "y": y, "z": z})
    if do_bet:
        checks["betweenness"] = Check("betweenness", tol=tol)
    if hasattr(space, "distance_rows"):
        _batch_axioms(space, sampler, checks, do_cn, do_bet)
    else:
        _loop_axioms(space, sampler, checks, do_cn, do_bet)
    return AxiomReport(space, list(checks.values()), sampler.seed)


def _loop_axioms(space, sampler, checks, do_cn, do_bet):
    rng = sampler.rng()
    d = space.distance
    W = space.convex_combine
    for _ in range(int(sampler.count)):
        x, y, z, w = sampler.points(space, rng, 4)
        lam, lam2 = (float(v) for v in rng.uniform(size=2))
        wit = {"x": x, "y": y, "z": z, "w": w, "lambda": lam, "lambda2": lam2}
        m = W(x, y, lam)
        dxy = d(x, y)
        checks["W1"].update(d(z, m) - ((1 - lam) * d(z, x) + lam * d(z, y)), wit)
        checks["W2"].update(abs(d(m, W(x, y, lam2)) - abs(lam - lam2) * dxy), wit)
        checks["W3"].update(d(m, W(y, x, 1.0 - lam)), wit)
        checks["W4"].update(d(W(x, z, lam), W(y, w, lam)) - ((1 - lam) * dxy + lam * d(z, w)), wit)
        if do_cn:
            checks["CN-"].update(cn_minus_violation(space, x, y, z), {"x": x, "y": y, "z": z})
        if do_bet:
            chain = _betweenness_chain(space, rng, sampler)
            if chain is not None:
                a, b, c, e = chain
                dae = d(a, e)
                v = max(abs(dae - d(a, b) - d(b, e)), abs(dae - d(a, c) - d(c, e)))
                checks["betweenness"].update(v, dict(zip("xyzw", chain)))


def _record(check, viol, rows):
    """Fold a batch of violations into ``check``; ``rows`` maps witness keys to arrays."""
    viol = np.asarray(viol, dtype=float)
    check.samples += len(viol)
    if not len(viol):
        return
    i = int(np.argmax(viol))
    if viol[i] > check.max_violation:
        check.max_violation = float(viol[i])
        check.witness = {k: (v[i] if np.ndim(v) == 1 else np.array(v[i])) for k, v in rows.items()}
        check.witness = {k: (float(v) if np.ndim(v) == 0 else v) for k, v in check.witness.items()}


def _batch_axioms(space, sampler, checks, do_cn, do_bet):
    rng = sampler.rng()
    n = int(sampler.count)
    d = space.distance_rows
    W = space.combine_rows
    x, y, z, w = (space.sample_rows(rng, n, sampler.region) for _ in range(4))
    lam, lam2 = rng.uniform(size=n), rng.uniform(size=n)
    rows = {"x": x, "y": y, "z": z, "w": w, "lambda": lam, "lambda2": lam2}
    m = W(x, y, lam)
    dxy = d(x, y)
    _record(checks["W1"], d(z, m) - ((1 - lam) * d(z, x) + lam * d(z, y)), rows)
    _record(checks["W2"], np.abs(d(m, W(x, y, lam2)) - np.abs(lam - lam2) * dxy), rows)
    _record(checks["W3"], d(m, W(y, x, 1.0 - lam)), rows)
    _record(checks["W4"], d(W(x, z, lam), W(y, w, lam)) - ((1 - lam) * dxy + lam * d(z, w)), rows)
    if do_cn:
        mid = W(x, y, np.full(n, 0.5))
        cn = d(z, mid) ** 2 - (0.5 * d(z, x) ** 2 + 0.5 * d(z, y) ** 2 - 0.25 * dxy ** 2)
        _record(checks["CN-"], cn, {"x": x, "y": y, "z": z})
    if do_bet:
        a, b = space.sample_rows(rng, n, sampler.region), space.sample_rows(rng, n, sampler.region)
        keep = d(a, b) > 1e-6
        a, b = a[keep], b[keep]
        c = W(a, b, rng.uniform(1.1, 3.0, size=len(a)))
        e = W(b, c, rng.uniform(1.1, 3.0, size=len(a)))
        dae = d(a, e)
        v = np.maximum(np.abs(dae - d(a, b) - d(b, e)), np.abs(dae - d(a, c) - d(c, e)))
        _record(checks["betweenness"], v, {"x": a, "y": b, "z": c, "w": e})


# -- uniform convexity -------------------------------------------------------------


def _premise_pair(space, rng, a, r, eps, tries=8, rounds=20):
    """Draw ``x, y`` in the closed ``r``-ball at ``a`` with ``d(x, y) >= eps r``, or ``None``."""
    if isinstance(space, TreeSpace):
        return _premise_pair_tree(space, rng, a, r, eps, rounds=rounds)
    d = space.distance
    shrink = 1.0 - 1e-12
    lo = max(eps - 1.0, 0.0) * r
    for _ in range(rounds):
        c = space.sample_near(rng, a, r)
        dc = d(a, c)
        if dc <= 1e-9 * r:
            continue
        # x at a chosen radius; for eps > 1 it must sit far enough out for a partner to exist
        dx = float(rng.uniform(lo, r)) * shrink
        x = space.extrapolate(a, c, dx / dc)
        if not 0.0 < d(a, x) <= r:
            continue
        for _ in range(tries):
            y = space.sample_near(rng, a, r)
            if d(x, y) >= eps * r and d(a, y) <= r:
                return x, y
        # fall back to the far side of the geodesic through x and a
        t_lo, t_hi = max(eps * r / dx - 1.0, 0.0) * (1.0 + 1e-12), r / dx * shrink
        if t_lo > t_hi:
            continue
        y = space.extrapolate(x, a, 1.0 + float(rng.uniform(t_lo, t_hi)))
        if d(x, y) >= eps * r and d(a, y) <= r:
            return x, y
    return None


def _tree_ball_extremes(space, a, r):
    """Vertices inside ``B(a, r)`` plus the points where edges cross its boundary."""
    out = []
    for v in space.vertices:
        p = space.vertex(v)
        if space.distance(a, p) <= r:
            out.append(p)
    for e in range(space.n_edges):
        length = space.edge_length(e)
        u, v = (space.vertex(w) for w in space.edge_ends(e))
        if a[0] == e and 0.0 < a[1] < length:
            offsets = [a[1] - r, a[1] + r]
        else:
            du, dv = space.distance(a, u), space.distance(a, v)
            # the path from a enters the edge through its nearer end
            offsets = [r - du] if du <= dv else [length - (r - dv)]
        out.extend(space.point(e, t) for t in offsets if 0.0 < t < length)
    return out


def _premise_pair_tree(space, rng, a, r, eps, rounds=20):
    # d(x, .) is convex, so its maximum over the ball sits at an extreme point
    d = space.distance
    ext = _tree_ball_extremes(space, a, r)
    if max(d(p, q) for p in ext for q in ext) < eps * r:
        return None
    for _ in range(rounds):
        x = space.sample_near(rng, a, r)
        far = [p for p in ext if d(x, p) >= eps * r]
        if not far:
            continue
        p = far[int(rng.integers(len(far)))]
        s = float(rng.uniform(0.0, 1.0 - eps * r / d(x, p)))
        y = space.convex_combine(p, x, s)
        if d(x, y) >= eps * r and d(a, y) <= r and d(a, x) <= r:
            return x, y
    return None


def _axis_candidates(space, r):
    """Flat-face configurations of the max-norm ball: midpoints stay at distance ``r``."""
    a = np.zeros(space.dim)
    out = []
    for eps in EPS_GRID:
        x = a.copy()
        y = a.copy()
        x[0] = y[0] = r
        if space.dim > 1:
            x[1], y[1] = r * eps / 2, -r * eps / 2
        out.append((space.validate(a), space.validate(x), space.validate(y), eps))
    return out


def modulus_audit(space, modulus=None, sampler=None, tol=1e-7):
    """Check the midpoint bound and the three interpolated variants on premise-satisfying samples."""
    modulus = make_modulus(modulus)
    modulus.check_values()
    sampler = Sampler() if sampler is None else sampler
    rng = sampler.rng()
    d = space.distance
    W = space.convex_combine
    names = ("midpoint", "lemma-i", "lemma-ii", "lemma-iii")
    checks = {n: Check(n, tol=tol) for n in names}
    skipped = 0

    def run(a, x, y, r, eps, lam, psi, s):
        wit = {"a": a, "x": x, "y": y, "r": r, "eps": eps, "lambda": lam}
        checks["midpoint"].update(d(W(x, y, 0.5), a) - (1 - modulus(r, eps)) * r, wit)
        p = W(x, y, lam)
        dp = d(p, a)
        c = 2 * lam * (1 - lam)
        checks["lemma-i"].update(dp - (1 - c * modulus(r, eps)) * r, wit)
        checks["lemma-ii"].update(dp - (1 - c * modulus(r, psi)) * r, {**wit, "psi": psi})
        checks["lemma-iii"].update(dp - (1 - c * modulus(s, eps)) * r, {**wit, "s": s})

    if isinstance(space, LinfSpace):
        for r in R_GRID:
            for a, x, y, eps in _axis_candidates(space, r):
                run(a, x, y, r, eps, 0.5, eps, r)

    for _ in range(int(sampler.count)):
        eps = EPS_GRID[int(rng.integers(len(EPS_GRID)))]
        r = R_GRID[int(rng.integers(len(R_GRID)))]
        a = sampler.points(space, rng, 1)[0]
        pair = _premise_pair(space, rng, a, r, eps)
        if pair is None:
            skipped += 1
            continue
        x, y = pair
        lam = float(rng.uniform())
        psi = eps * float(rng.uniform(0.05, 1.0))
        s = r * float(rng.uniform(1.0, 5.0))
        run(a, x, y, r, eps, lam, psi, s)
    rep = AxiomReport(space, [checks[n] for n in names], sampler.seed)
    rep.skipped = skipped
    rep.modulus = modulus.to_json()
    return rep


__all__ = [
    "Sampler", "ModulusDescriptor", "power_modulus", "cat0_modulus", "make_modulus",
    "verify_space_axioms", "modulus_audit", "cn_minus_violation", "AxiomReport", "Check",
    "LINF_CN_WITNESS",
]

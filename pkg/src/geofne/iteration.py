"""Picard iteration, displacement analytics, rate certificates and related audits.

A trace stores the orbit ``x_0, x_1 = T x_0, ...`` together with the step
displacements ``d(x_n, x_{n+1})`` and the normalized distances
``d(x_n, x_0) / n``. The analytics read the monotone limits of these
quantities off the tail of the trace.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .axiom_verifier import make_modulus
from .centers import asymptotic_center
from .errors import DomainError, InvalidInputError, NonconvergenceError, UnboundedOrbitError
from .functionals import ResolventParams, resolvent

#: Orbits farther than this from their start are treated as unbounded.
ORBIT_CAP = 1e6
#: Relative guard against ``floor`` landing one below an exact integer because of rounding.
FLOOR_GUARD = 1e-12
MONOTONE_SLACK = 1e-9


@dataclass
class IterationTrace:
    """Orbit of an operator plus per-step quantities.

    ``displacements[n] = d(x_n, x_{n+1})`` for ``n < N``; ``dist_over_n[n]``
    is ``d(x_n, x_0) / n`` with ``nan`` at ``n = 0``.
    """

    space: object
    points: list
    displacements: np.ndarray
    dist_over_n: np.ndarray
    operator: object = None
    operator_json: dict = None
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @property
    def N(self):
        return len(self.points) - 1

    def dist_to_x0(self):
        n = np.arange(len(self.points), dtype=float)
        out = self.dist_over_n * n
        out[0] = 0.0
        return out

    def to_json(self):
        disp = self.displacements
        return {
            "space": self.space.describe(),
            "operator": self.operator_json,
            "N": self.N,
            "x0": self.space.point_to_json(self.points[0]),
            "x_last": self.space.point_to_json(self.points[-1]),
            "first_displacement": float(disp[0]) if len(disp) else None,
            "last_displacement": float(disp[-1]) if len(disp) else None,
            **self.extra,
        }

    def write_csv(self, path, anchors=()):
        """Columns ``n, x, displacement, dist_to_x0_over_n, fejer_dist_anchor_i``.

        ``x`` is the JSON point; floats use 17 significant digits and
        undefined cells (last displacement, ``n = 0`` ratio) are empty.
        """
        anchors = [self.space.validate(a) for a in anchors]
        fmt = lambda v: "" if v is None or (isinstance(v, float) and math.isnan(v)) else format(float(v), ".17g")
        header = ["n", "x", "displacement", "dist_to_x0_over_n"] + [f"fejer_dist_anchor_{i}" for i in range(len(anchors))]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for n, x in enumerate(self.points):
                disp = self.displacements[n] if n < len(self.displacements) else None
                row = [n, json.dumps(_json_point(self.space, x), separators=(",", ":")), fmt(disp),
                       fmt(self.dist_over_n[n])]
                row += [fmt(self.space.distance(a, x)) for a in anchors]
                w.writerow(row)


def _json_point(space, x):
    obj = space.point_to_json(x)
    return _round_trip(obj)


def _round_trip(obj):
    if isinstance(obj, float):
        return float(format(obj, ".17g"))
    if isinstance(obj, dict):
        return {k: _round_trip(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_trip(v) for v in obj]
    return obj


def _build_trace(space, points, operator=None, operator_json=None, extra=None):
    d = space.distance
    disp = np.array([d(a, b) for a, b in zip(points[:-1], points[1:])], dtype=float)
    x0 = points[0]
    ratio = np.full(len(points), np.nan)
    for n in range(1, len(points)):
        ratio[n] = d(points[n], x0) / n
    return IterationTrace(space, list(points), disp, ratio, operator, operator_json, extra or {})


def picard_trace(T, x0, N, cap=None):
    """Orbit ``x_0, ..., x_N`` of ``T``.

    Raises :class:`DomainError` (with ``index``) if an iterate leaves the
    domain, and :class:`UnboundedOrbitError` if ``cap`` is given and exceeded.
    """
    N = int(N)
    if N < 1:
        raise InvalidInputError("N must be a positive integer")
    space = T.space
    x = space.validate(x0)
    if not T.in_domain(x):
        raise DomainError("x0 is outside the operator's domain", index=0)
    points = [x]
    for n in range(1, N + 1):
        try:
            x = T.apply(x)
        except DomainError as exc:
            raise DomainError(f"iterate {n - 1} left the domain: {exc}", index=n - 1) from None
        if not T.in_domain(x):
            raise DomainError(f"iterate {n} left the domain (operator misdeclared)", index=n)
        if cap is not None:
            dist = space.distance(x, points[0])
            if dist > cap:
                raise UnboundedOrbitError(f"orbit left the cap {cap} at step {n}", index=n, distance=dist)
        points.append(x)
    return _build_trace(space, points, T, T.to_json())


# -- displacement analytics -------------------------------------------------------


@dataclass
class DisplacementAnalytics:
    """Tail estimates of ``R_k = lim d(x_{n+k}, x_n)``, ``L = lim d(x_n, x_0) / n`` and ``r_C = R_1``."""

    R: dict
    L: float
    r_C: float
    monotone: dict
    rk_deviation: float
    l_deviation: float
    tol: float
    L_history: np.ndarray = field(repr=False, default=None)

    @property
    def rk_ok(self):
        return self.rk_deviation <= self.tol

    @property
    def l_ok(self):
        return self.l_deviation <= self.tol

    @property
    def passed(self):
        return self.rk_ok and self.l_ok

    def to_json(self):
        return {
            "R": {str(k): v for k, v in self.R.items()},
            "L": self.L,
            "r_C": self.r_C,
            "monotone": {str(k): v for k, v in self.monotone.items()},
            "max_abs_Rk_minus_kR1": self.rk_deviation,
            "abs_L_minus_R1": self.l_deviation,
            "tol": self.tol,
            "pass": self.passed,
        }


def displacement_analytics(trace, K=5, tail=None, tol=5e-3):
    """Read ``R_1..R_K``, ``L`` and ``r_C`` off the trace and compare them.

    ``R_k`` is the last available value of ``d(x_{n+k}, x_n)``; over the last
    ``tail`` indices that sequence should not increase (checked, reported in
    ``monotone``). ``L`` is the running infimum of ``d(x_n, x_0) / n``.
    """
    K = int(K)
    pts = trace.points
    tail = max(1, len(pts) // 2) if tail is None else int(tail)
    if K < 1 or len(pts) < tail + K:
        raise InvalidInputError(f"trace of length {len(pts)} is too short for tail={tail}, K={K}")
    d = trace.space.distance
    R, mono = {}, {}
    last = len(pts) - 1
    for k in range(1, K + 1):
        if k == 1:
            seq = trace.displacements[last - tail:]
        else:
            seq = np.array([d(pts[n + k], pts[n]) for n in range(last - k - tail + 1, last - k + 1)])
        R[k] = float(seq[-1])
        mono[k] = bool(np.all(np.diff(seq) <= MONOTONE_SLACK))
    hist = np.minimum.accumulate(trace.dist_over_n[1:])
    L = float(hist[-1])
    r1 = R[1]
    rk_dev = max(abs(R[k] - k * r1) for k in R)
    return DisplacementAnalytics(R, L, r1, mono, rk_dev, abs(L - r1), float(tol), hist)


# -- rate certificates -----------------------------------------------------------------


@dataclass(frozen=True)
class RateCertificate:
    kind: str
    epsilon: float
    lam: float
    b: float
    modulus: dict
    bound: int
    value: float

    def to_json(self):
        return {"kind": self.kind, "epsilon": self.epsilon, "lambda": self.lam, "b": self.b,
                "modulus": self.modulus, "bound": self.bound, "unrounded": self.value}


def _floor(v):
    return int(math.floor(v * (1.0 + FLOOR_GUARD)))


def rate_bound(kind, epsilon, lam, b, modulus=None, space=None):
    """Step count after which displacements stay below ``epsilon``.

    ``Phi`` uses ``eta(b+1, eps/(b+1))``, ``PhiTilde`` the factored form
    ``eta_tilde``, and ``Psi`` the closed CAT(0) expression
    ``8 (b+1) / (lam (1-lam) eps^2)``. Every kind is ``0`` when ``eps >= 2b``.
    ``modulus`` defaults to ``eps^2 / 8``; ``space``, if given, must be CAT(0) for Psi.
    """
    epsilon, lam, b = float(epsilon), float(lam), float(b)
    if not 0.0 < lam < 1.0:
        raise InvalidInputError(f"lambda must lie in (0, 1), got {lam}")
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    if not b > 0:
        raise InvalidInputError(f"b must be positive, got {b}")
    mod = make_modulus(modulus)
    if kind == "Psi":
        if space is not None and not space.cat0:
            raise InvalidInputError(f"Psi needs a CAT(0) space; {space.model} is not")
        mod_json = {"name": "cat0-closed-form"}
    elif kind in ("Phi", "PhiTilde"):
        mod_json = mod.to_json()
        if kind == "PhiTilde" and not mod.factored:
            raise InvalidInputError("PhiTilde needs a modulus in factored form eta = eps * eta_tilde")
    else:
        raise InvalidInputError(f"unknown certificate kind {kind!r}")
    if epsilon >= 2.0 * b:
        return RateCertificate(kind, epsilon, lam, b, mod_json, 0, 0.0)
    c = lam * (1.0 - lam)
    if kind == "Psi":
        value = 8.0 * (b + 1.0) / c / epsilon ** 2
    else:
        r, e = b + 1.0, epsilon / (b + 1.0)
        eta = mod.eta(r, e) if kind == "Phi" else mod.eta_tilde(r, e)
        value = (b + 1.0) / (epsilon * c * eta)
    return RateCertificate(kind, epsilon, lam, b, mod_json, _floor(value), value)


@dataclass
class CertificateVerdict:
    status: str
    certificate: RateCertificate
    hypothesis: dict
    first_violation: int = None
    needed_length: int = None
    extrapolated: bool = False

    @property
    def passed(self):
        return self.status == "PASS"

    def to_json(self):
        return {"status": self.status, "certificate": self.certificate.to_json(),
                "hypothesis": self.hypothesis, "first_violation": self.first_violation,
                "needed_length": self.needed_length, "extrapolated": self.extrapolated}


def _hypothesis(trace, cert, witness, T):
    """Record how ``T`` is known to have approximate fixed points within ``b`` of ``x_0``."""
    space = trace.space
    x0 = trace.points[0]
    delta = 1.0 / (4.0 * (cert.bound + 1))
    if witness is not None:
        y = space.validate(witness)
        if T is None:
            raise InvalidInputError("checking a witness needs the operator")
        dy, disp = space.distance(y, x0), space.distance(y, T.apply(y))
        if dy > cert.b or not disp < delta:
            raise InvalidInputError(
                f"witness fails the hypothesis: d(y, x0) = {dy} (b = {cert.b}), d(y, Ty) = {disp} (delta = {delta})")
        return {"source": "witness", "point": space.point_to_json(y), "dist_to_x0": dy,
                "displacement": disp, "delta": delta}
    if T is not None and T.domain_diameter() <= cert.b:
        return {"source": "bounded-domain", "diameter": T.domain_diameter(), "delta": delta}
    if T is not None:
        for y in T.fixed_points(near=x0):
            dy, disp = space.distance(y, x0), space.distance(y, T.apply(y))
            if dy <= cert.b and disp < delta:
                return {"source": "fixed-point", "point": space.point_to_json(y), "dist_to_x0": dy,
                        "displacement": disp, "delta": delta}
    raise InvalidInputError("no approximate fixed point within b of x0 is known: supply a witness")


def certify_asymptotic_regularity(trace, cert, witness=None, T=None):
    """Check ``d(x_n, x_{n+1}) <= epsilon`` for every ``n >= cert.bound`` in the trace.

    The certificate's hypothesis must be witnessed: by ``witness`` (a point
    within ``b`` of ``x_0`` whose displacement is below ``1 / (4 (N + 1))``),
    by a domain of diameter at most ``b``, or by a known fixed point of the
    operator. If the trace ends before the bound, the verdict is PASS only when
    the trace's displacements never increase and the last one is already at
    most ``epsilon`` (so all later ones are too); otherwise INCONCLUSIVE.
    """
    T = T if T is not None else trace.operator
    hyp = _hypothesis(trace, cert, witness, T)
    disp = trace.displacements
    eps = cert.epsilon
    N = cert.bound
    if N < len(disp):
        bad = np.flatnonzero(disp[N:] > eps)
        if len(bad):
            return CertificateVerdict("FAIL", cert, hyp, first_violation=int(N + bad[0]))
        return CertificateVerdict("PASS", cert, hyp)
    monotone = bool(np.all(np.diff(disp) <= MONOTONE_SLACK))
    if len(disp) and monotone and disp[-1] <= eps:
        return CertificateVerdict("PASS", cert, hyp, extrapolated=True)
    return CertificateVerdict("INCONCLUSIVE", cert, hyp, needed_length=N + 2)


# -- Fejer monotonicity ---------------------------------------------------------------


@dataclass
class FejerVerdict:
    passed: bool
    first_violation: tuple
    limits: list
    bounded: bool
    max_excess: float

    def to_json(self):
        return {"pass": self.passed, "first_violation": self.first_violation, "limits": self.limits,
                "bounded": self.bounded, "max_excess": self.max_excess}


def fejer_audit(trace, anchors, slack=1e-9):
    """PASS iff ``d(p, x_{n+1}) <= d(p, x_n) + slack`` for every anchor and step.

    ``limits`` holds the last distance to each anchor; ``first_violation`` is
    ``(anchor index, step n)`` of the earliest failure.
    """
    anchors = list(anchors)
    if not anchors:
        raise InvalidInputError("fejer audit needs at least one anchor")
    space = trace.space
    first = None
    excess = -math.inf
    limits = []
    bounded = True
    for i, p in enumerate(anchors):
        p = space.validate(p)
        dist = np.array([space.distance(p, x) for x in trace.points])
        inc = np.diff(dist)
        excess = max(excess, float(inc.max()) if len(inc) else 0.0)
        bad = np.flatnonzero(inc > slack)
        if len(bad) and (first is None or bad[0] < first[1]):
            first = (i, int(bad[0]))
        limits.append(float(dist[-1]))
        bounded = bounded and float(dist.max()) <= float(dist[0]) + slack * len(dist)
    return FejerVerdict(first is None, first, limits, bounded, max(excess, 0.0))


# -- proximal point algorithm ------------------------------------------------------------


@dataclass
class ProximalRun:
    trace: IterationTrace
    step_sizes: list
    partial_sum: float
    divergent: bool
    diagnostic: str

    def to_json(self):
        return {"trace": self.trace.to_json(), "partial_sum": self.partial_sum,
                "divergent": self.divergent, "diagnostic": self.diagnostic}


def proximal_point_run(F, step_sizes, x0, N, divergence_threshold=5.0, tol=1e-8):
    """``x_{n+1} = J_{mu_n} x_n`` with ``mu_n = 2 lambda_n``.

    ``step_sizes`` is a sequence of at least ``N`` positive reals or a callable
    ``n -> lambda_n``. The partial sum of the steps is compared with
    ``divergence_threshold``; a finite prefix cannot prove divergence, so the
    flag only says whether the sum got past the threshold.
    """
    N = int(N)
    if N < 1:
        raise InvalidInputError("N must be a positive integer")
    lams = [float(step_sizes(n)) if callable(step_sizes) else float(step_sizes[n]) for n in range(N)]
    if any(not v > 0 for v in lams):
        raise InvalidInputError("step sizes must be positive")
    space = F.space
    x = space.validate(x0)
    points = [x]
    for n, lam in enumerate(lams):
        try:
            x = resolvent(F, ResolventParams(2.0 * lam, tol=tol), x)
        except NonconvergenceError as exc:
            raise NonconvergenceError(f"resolvent failed at step {n}: {exc}", best=exc.best,
                                      residual=exc.residual) from None
        points.append(x)
    total = float(sum(lams))
    divergent = total > divergence_threshold
    diag = (f"partial sum {total:.6g} exceeds threshold {divergence_threshold:g}" if divergent
            else "step sizes not divergent in sum")
    op_json = {"kind": "proximal-point", "f": F.to_json()}
    trace = _build_trace(space, points, None, op_json, {"partial_sum": total})
    return ProximalRun(trace, lams, total, divergent, diag)


# -- fixed points on unions ------------------------------------------------------------------


@dataclass
class UnionSearchResult:
    point: object
    classification: str
    period: int
    residual: float
    centers: list
    piece: int

    def to_json(self, space):
        return {"point": space.point_to_json(self.point), "classification": self.classification,
                "period": self.period, "residual": self.residual, "piece": self.piece,
                "centers": [space.point_to_json(c) for c in self.centers]}


def union_fixed_point_search(T, pieces, z, window=200, tol=1e-6, orbit_length=None, cap=ORBIT_CAP):
    """Find a fixed or periodic point of ``T`` on the union of ``pieces``.

    Runs the orbit of ``z``, takes the asymptotic center ``x_k`` of its last
    ``window`` points with respect to each piece, and returns a center with
    ``d(x_k, T x_k) <= tol`` if there is one. Otherwise it follows
    ``k -> (piece containing T x_k)`` around a cycle and checks that the first
    center on it returns to itself, within ``10 tol``, after the cycle length.
    """
    pieces = list(pieces)
    if not pieces:
        raise InvalidInputError("need at least one piece")
    space = T.space
    z = space.validate(z)
    n_orbit = int(orbit_length) if orbit_length is not None else 10 * int(window)
    trace = picard_trace(T, z, n_orbit, cap=cap)
    tail = trace.points[-int(window):]
    centers = [asymptotic_center(space, tail, C, tol=min(tol, 1e-8)).center for C in pieces]
    images = [T.apply(c) for c in centers]
    resid = [space.distance(c, tc) for c, tc in zip(centers, images)]

    for k, C in enumerate(pieces):
        if C.contains(images[k], tol) and resid[k] <= tol:
            return UnionSearchResult(centers[k], "fixed", 1, resid[k], centers, k)

    def piece_of(x):
        for j, C in enumerate(pieces):
            if C.contains(x, tol):
                return j
        return None

    k = 0
    seen = []
    while k is not None and k not in seen:
        seen.append(k)
        k = piece_of(images[k])
    if k is None:
        raise NonconvergenceError("the chase left the union of pieces", best=centers[0])
    cycle = seen[seen.index(k):]
    start = centers[cycle[0]]
    x = start
    for m in range(1, len(pieces) + 1):
        x = T.apply(x)
        r = space.distance(x, start)
        if r <= 10.0 * tol:
            if m == 1:
                return UnionSearchResult(start, "fixed", 1, r, centers, cycle[0])
            return UnionSearchResult(start, "periodic", m, r, centers, cycle[0])
    raise NonconvergenceError("no periodic center found", best=start)


__all__ = [
    "IterationTrace", "picard_trace", "DisplacementAnalytics", "displacement_analytics",
    "RateCertificate", "rate_bound", "CertificateVerdict", "certify_asymptotic_regularity",
    "FejerVerdict", "fejer_audit", "ProximalRun", "proximal_point_run", "UnionSearchResult",
    "union_fixed_point_search", "ORBIT_CAP",
]

"""End-to-end acceptance checks; each criterion logs one PASS/FAIL line."""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from geofne import cli
from geofne.axiom_verifier import Sampler, verify_space_axioms
from geofne.centers import asymptotic_center, delta_convergence_diagnostic
from geofne.convex_sets import Ball, Segment, Subtree
from geofne.functionals import (Distance, Indicator, SetDistance, SquaredDistance, WeightedSum,
                                resolvent)
from geofne.iteration import (certify_asymptotic_regularity, displacement_analytics, picard_trace,
                              proximal_point_run, rate_bound, union_fixed_point_search)
from geofne.model_spaces import LinfSpace
from geofne.operators import (Bruck, Negation, Projection, Resolvent, Translation, TwoPointSwap,
                              firm_nonexpansiveness_audit)

from conftest import cat0_spaces

PREFIX_COMMANDS = {"verify": "verify", "audit": "audit-operator", "iterate": "iterate", "rate": "rate",
                   "prox": "prox", "centers": "centers", "union": "union-fixpoint"}
CONFIGS = sorted((Path(__file__).resolve().parents[1] / "demos" / "configs").glob("*.json"))


def _convex(space, c):
    return Subtree(space, ["o", "a"]) if space.model == "tree" else Ball(space, c, 0.7)


def _fne_ops(space, bruck=True):
    rng = np.random.default_rng(0)
    a, b, c = space.sample(rng, 3)
    ops = {
        "projection-convex": Projection(space, _convex(space, c)),
        "projection-segment": Projection(space, Segment(space, a, b)),
        "resolvent-sqdist": Resolvent(SquaredDistance(space, a), 1.3),
        "resolvent-dist": Resolvent(Distance(space, b), 0.05),
    }
    if bruck:
        ops["bruck-projection"] = Bruck(Projection(space, Segment(space, a, c)), 0.6)
    return ops


def _label(space):
    return space.model


# -- 1 ---------------------------------------------------------------------------


def test_criterion_1_axioms(record):
    t0 = time.perf_counter()
    ok, worst = True, {}
    for space in cat0_spaces():
        rep = verify_space_axioms(space, Sampler(seed=0, count=10_000), tol=1e-7)
        names = set(rep.names())
        ok &= rep.passed and {"W1", "W2", "W3", "W4", "CN-"} <= names
        ok &= all(rep[n].samples == 10_000 for n in ("W1", "W2", "W3", "W4", "CN-"))
        worst[_label(space)] = max(rep[n].max_violation for n in names)
    linf = verify_space_axioms(LinfSpace(2), Sampler(seed=0, count=10_000), check_cn=True)
    witness = linf["CN- stored witness"].max_violation
    ok &= abs(witness - 1.0) <= 1e-12 and not linf.passed
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 10.0
    record(1, ok, f"worst={worst} linf_witness={witness:.3g} time={elapsed:.1f}s")
    assert ok


# -- 2 ---------------------------------------------------------------------------


def test_criterion_2_fne_audit(record):
    ok, failing = True, []
    for space in cat0_spaces():
        for name, T in _fne_ops(space).items():
            rep = firm_nonexpansiveness_audit(T, pairs=200, tol=1e-6, seed=1)
            if not rep.passed:
                ok = False
                failing.append(f"{space.model}/{name}")
    sig = 0.0
    for space in cat0_spaces():
        rng = np.random.default_rng(5)
        p, q = space.sample(rng, 2)
        bad = [TwoPointSwap(space, p, q)]
        if space.model == "euclidean":
            bad.append(Negation(space))
        for T in bad:
            rep = firm_nonexpansiveness_audit(T, pairs=200, tol=1e-6, seed=1)
            ok &= not rep.passed
            for r in rep.results:
                target = abs(2 * r.lam - 1)
                sig = max(sig, abs(r.combined_ratio_min - target), abs(r.combined_ratio_max - target))
                ok &= not r.passed
    ok &= sig <= 1e-9
    record(2, ok, f"fne_failures={failing} signature_err={sig:.2g}")
    assert ok


# -- 3 ---------------------------------------------------------------------------


def _functional_kinds(space, rng):
    a, b, c = space.sample(rng, 3)
    C = Subtree(space, ["o", "a", "b"]) if space.model == "tree" else Ball(space, c, 0.8)
    S = Segment(space, b, c)
    return {
        "sqdist": SquaredDistance(space, a),
        "dist": Distance(space, a),
        "indicator": Indicator(space, C),
        "setdist": SetDistance(space, S),
        "sqdist+dist": WeightedSum([(1.0, SquaredDistance(space, a)), (0.5, Distance(space, b))]),
        "dist+setdist": WeightedSum([(1.0, Distance(space, a)), (1.0, SetDistance(space, S))]),
        "sqdist+indicator": WeightedSum([(1.0, SquaredDistance(space, a)), (1.0, Indicator(space, C))]),
    }


def test_criterion_3_resolvent_identity(record):
    worst = {}
    for space in cat0_spaces():
        rng = np.random.default_rng(11)
        for name, F in _functional_kinds(space, rng).items():
            w = 0.0
            for i, x in enumerate(space.sample(rng, 100)):
                mu = (0.5, 1.0, 2.0)[i % 3]
                lam = (0.25, 0.5, 0.75)[(i // 3) % 3]
                y = resolvent(F, mu, x)
                y2 = resolvent(F, (1.0 - lam) * mu, space.convex_combine(x, y, lam))
                w = max(w, space.distance(y, y2))
            worst[f"{space.model}/{name}"] = w
    top = max(worst, key=worst.get)
    ok = worst[top] <= 1e-6
    record(3, ok, f"worst residual {worst[top]:.2g} ({top})")
    assert ok


# -- 4 ---------------------------------------------------------------------------


def test_criterion_4_displacement_analytics(euclid, record):
    a = displacement_analytics(picard_trace(Translation(euclid, (0.3, 0)), (0, 0), 10_000), K=5)
    ok = all(abs(a.R[k] - 0.3 * k) <= 1e-9 for k in range(1, 6))
    ok &= abs(a.L - 0.3) <= 1e-9 and abs(a.r_C - 0.3) <= 1e-9
    worst = 0.0
    for space in cat0_spaces():
        x0 = space.sample(np.random.default_rng(3), 1)[0]
        for name, T in _fne_ops(space, bruck=False).items():
            an = displacement_analytics(picard_trace(T, x0, 10_000), K=5, tol=5e-3)
            worst = max(worst, an.rk_deviation, an.l_deviation)
            ok &= an.passed
    ok &= worst <= 5e-3
    record(4, ok, f"translation R1={a.R[1]:.12g} L={a.L:.12g} r_C={a.r_C:.12g}; fne worst={worst:.2g}")
    assert ok


# -- 5 ---------------------------------------------------------------------------


def test_criterion_5_rate_certificates(record):
    t0 = time.perf_counter()
    ok = rate_bound("Phi", 0.5, 0.5, 1.0).bound == 2048 and rate_bound("Psi", 0.5, 0.5, 1.0).bound == 256
    verdicts, psi_rows = 0, []
    for space in cat0_spaces():
        rng = np.random.default_rng(4)
        for name, T in _fne_ops(space, bruck=False).items():
            x0 = T.sample_domain(rng, 1)[0]
            fix = T.fixed_points(near=x0)
            b = max(1.0, float(np.ceil(space.distance(fix[0], x0)))) if fix else 1.0
            trace = picard_trace(T, x0, 2100)
            for eps in (0.5, 0.1, 0.02):
                for lam in (0.25, 0.5, 0.75):
                    for kind in ("Phi", "PhiTilde"):
                        v = certify_asymptotic_regularity(trace, rate_bound(kind, eps, lam, b, space=space))
                        ok &= v.passed
                        verdicts += 1
                    psi = rate_bound("Psi", eps, lam, b, space=space)
                    psi_rows.append(certify_asymptotic_regularity(trace, psi).status)
    elapsed = time.perf_counter() - t0
    ok &= elapsed <= 60.0 and len(psi_rows) > 0
    print("Psi vs PhiTilde (report only):", {s: psi_rows.count(s) for s in set(psi_rows)})
    record(5, ok, f"{verdicts} certificates, Phi(0.5,0.5,1)=2048, Psi=256, time={elapsed:.1f}s")
    assert ok


# -- 6 ---------------------------------------------------------------------------


def test_criterion_6_proximal_point(record):
    worst, fix_res = -np.inf, 0.0
    for space in cat0_spaces():
        rng = np.random.default_rng(6)
        a, x0 = space.sample(rng, 2)
        F = SquaredDistance(space, a)
        run = proximal_point_run(F, [0.5] * 20, x0, 20)
        d0 = space.distance(x0, a)
        for n, x in enumerate(run.trace.points):
            worst = max(worst, space.distance(x, a) - d0 * 2.0 ** -n)
        for mu in (0.1, 0.5, 1.0, 5.0):
            fix_res = max(fix_res, space.distance(resolvent(F, mu, a), a))
    ok = worst <= 1e-6 and fix_res <= 1e-7
    record(6, ok, f"max excess over d0*2^-n = {worst:.2g}, minimizer residual {fix_res:.2g}")
    assert ok


# -- 7 ---------------------------------------------------------------------------


def test_criterion_7_centers(euclid, record):
    pts = [euclid.validate(p) for p in [(0.0, 0.0), (2.0, 0.0)] * 10]
    res = asymptotic_center(euclid, pts)
    g = np.linspace(-1, 3, 4001)
    U, V = np.meshgrid(g, np.linspace(-1, 1, 2001))
    P = np.stack([U.ravel(), V.ravel()], axis=1)
    R = np.max(np.linalg.norm(P[:, None, :] - np.asarray(pts[:2])[None], axis=2), axis=1)
    i = int(np.argmin(R))
    ok = np.linalg.norm(res.center - P[i]) <= 1e-4 and abs(res.radius - R[i]) <= 1e-4
    ok &= np.linalg.norm(res.center - (1, 0)) <= 1e-4 and abs(res.radius - 1.0) <= 1e-4

    tol = 1e-6
    spreads = []
    for space in cat0_spaces():
        rng = np.random.default_rng(7)
        b, c, x0 = space.sample(rng, 3)
        S = Segment(space, b, c)
        T = Resolvent(SetDistance(space, S), 0.05)
        tr = picard_trace(T, x0, 400)
        windows = [{"start": 200}, {"start": 300}, {"start": 250, "stride": 3}]
        rep = delta_convergence_diagnostic(tr, C=S, windows=windows, tol=tol)
        spreads.append(rep.spread)
        ok &= rep.spread <= 10 * tol
        ok &= delta_convergence_diagnostic(tr, tol=tol).verdict == "CONSISTENT"
        for T2 in _fne_ops(space, bruck=False).values():
            y0 = T2.sample_domain(rng, 1)[0]
            ok &= delta_convergence_diagnostic(picard_trace(T2, y0, 300), tol=tol).verdict == "CONSISTENT"
    tr = picard_trace(Translation(euclid, (0.3, 0)), (0, 0), 400)
    ok &= delta_convergence_diagnostic(tr, tol=tol).verdict == "NOT CONSISTENT"
    record(7, ok, f"pair center {np.round(res.center, 8).tolist()} radius {res.radius:.8f}; "
                  f"window spread {max(spreads):.2g}")
    assert ok


# -- 8 ---------------------------------------------------------------------------


def test_criterion_8_union_search(euclid, record):
    T = Resolvent(SquaredDistance(euclid, (0, 0)), 9.0,
                  pieces=[Ball(euclid, (0, 0), 1), Ball(euclid, (5, 0), 1)])
    res = union_fixed_point_search(T, T.pieces, (5.5, 0.2), window=50)
    ok = res.classification == "fixed" and res.residual <= 1e-6
    S = TwoPointSwap(euclid, (0, 0), (1, 0))
    swap = union_fixed_point_search(S, S.pieces, (1, 0), window=20)
    ok &= swap.classification == "periodic" and swap.period == 2
    classes = []
    for space in cat0_spaces():
        rng = np.random.default_rng(8)
        for T2 in _fne_ops(space, bruck=False).values():
            if T2.pieces is None:
                z = space.sample(rng, 1)[0]
                pieces = [Ball(space, z, 50.0)] if space.model != "tree" else [Subtree(space, space.vertices)]
            else:
                pieces = T2.pieces
                z = T2.sample_domain(rng, 1)[0]
            r = union_fixed_point_search(T2, pieces, z, window=50)
            classes.append(r.classification)
    ok &= all(c == "fixed" for c in classes)
    record(8, ok, f"two-ball residual {res.residual:.2g}; swap period {swap.period}; fne {len(classes)} fixed")
    assert ok


# -- 9 ---------------------------------------------------------------------------


def test_criterion_9_reproducible_reports(tmp_path, record):
    assert CONFIGS
    differing = []
    for path in CONFIGS:
        cfg = json.loads(path.read_text())
        cmd = PREFIX_COMMANDS[path.stem.split("_")[0]]
        texts = []
        for k in range(2):
            out = tmp_path / f"{path.stem}_{k}"
            cli.run(cmd, cfg, out=str(out))
            rep = json.loads((out / "report.json").read_text())
            rep.pop(cli.TIMESTAMP_KEY)
            texts.append(cli.dumps(rep))
            for f in sorted(out.iterdir()):
                if f.name != "report.json":
                    texts.append(f.read_bytes())
        half = len(texts) // 2
        if texts[:half] != texts[half:]:
            differing.append(path.stem)
    ok = not differing
    record(9, ok, f"{len(CONFIGS)} configs, differing={differing}")
    assert ok

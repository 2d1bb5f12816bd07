import numpy as np
import pytest

from geofne.centers import (FINITE_NOTE, SequenceWindow, asymptotic_center, asymptotic_radius,
                            default_windows, delta_convergence_diagnostic)
from geofne.convex_sets import Ball, Halfspace, Segment, Subtree
from geofne.errors import InvalidInputError
from geofne.functionals import SquaredDistance
from geofne.iteration import picard_trace
from geofne.operators import Projection, Resolvent, Translation

from conftest import hyp_point

PAIR = [(0.0, 0.0), (2.0, 0.0)] * 10


def _grid_center(space, pts, C, lo=-3, hi=3, n=601):
    g = np.linspace(lo, hi, n)
    U, V = np.meshgrid(g, g)
    P = np.stack([U.ravel(), V.ravel()], axis=1)
    if C is not None:
        P = np.array([p for p in P if C.contains(p, 1e-12)])
    R = np.max(np.linalg.norm(P[:, None, :] - np.asarray(pts)[None, :, :], axis=2), axis=1)
    i = int(np.argmin(R))
    return P[i], R[i]


def _pts(space, raw):
    return [space.validate(p) for p in raw]


def test_radius_examples(euclid):
    pts = _pts(euclid, PAIR)
    assert asymptotic_radius(euclid, SequenceWindow(pts), (1, 0)) == pytest.approx(1.0)
    assert asymptotic_radius(euclid, SequenceWindow([euclid.validate((3, 3))]), (3, 3)) == 0.0


def test_empty_window(euclid):
    with pytest.raises(InvalidInputError):
        SequenceWindow([])
    with pytest.raises(InvalidInputError):
        SequenceWindow(_pts(euclid, PAIR), start=100)


def test_window_policy(euclid):
    w = SequenceWindow(_pts(euclid, [(i, 0) for i in range(10)]), start=4, stride=3)
    assert [p[0] for p in w.selected()] == [4, 7]


def test_constant_window(cat0):
    p = cat0.sample(np.random.default_rng(0), 1)[0]
    res = asymptotic_center(cat0, SequenceWindow([p] * 5))
    assert cat0.distance(res.center, p) <= 1e-7 and res.radius <= 1e-7


def test_alternating_pair_against_grid(euclid):
    pts = _pts(euclid, PAIR)
    res = asymptotic_center(euclid, SequenceWindow(pts))
    np.testing.assert_allclose(res.center, (1, 0), atol=1e-6)
    assert res.radius == pytest.approx(1.0, abs=1e-6)
    g, r = _grid_center(euclid, pts, None)
    assert np.linalg.norm(res.center - g) <= 1e-4 + 0.01 and abs(res.radius - r) <= 1e-4


def test_alternating_pair_in_halfspace(euclid):
    pts = _pts(euclid, PAIR)
    H = Halfspace(euclid, (1, 0), 0.0)
    res = asymptotic_center(euclid, SequenceWindow(pts), H)
    np.testing.assert_allclose(res.center, (0, 0), atol=1e-6)
    assert res.radius == pytest.approx(2.0, abs=1e-6)
    g, r = _grid_center(euclid, pts, H)
    assert np.linalg.norm(res.center - g) <= 0.01 and abs(res.radius - r) <= 1e-4


def test_center_in_ball_against_grid(euclid):
    rng = np.random.default_rng(3)
    pts = euclid.sample(rng, 12)
    C = Ball(euclid, (2, 2), 1.5)
    res = asymptotic_center(euclid, pts, C)
    g, r = _grid_center(euclid, pts, C, lo=-1, hi=4, n=501)
    assert res.radius <= r + 1e-9
    assert np.linalg.norm(res.center - g) <= 0.03


def test_hyperboloid_symmetric_pair(hyp):
    pts = [hyp_point(1.0, 0.0), hyp_point(1.0, np.pi)]
    res = asymptotic_center(hyp, pts)
    assert hyp.distance(res.center, hyp.origin) <= 1e-6
    assert res.radius == pytest.approx(1.0, abs=1e-6)


def test_hyperboloid_center_beats_samples(hyp):
    rng = np.random.default_rng(8)
    pts = hyp.sample(rng, 15)
    C = Ball(hyp, hyp_point(0.5, 1.0), 0.4)
    res = asymptotic_center(hyp, pts, C)
    assert C.contains(res.center)
    for q in C.sample(rng, 300):
        assert res.radius <= asymptotic_radius(hyp, pts, q) + 1e-9


def test_tree_leaves_center(tree):
    leaves = [tree.vertex(v) for v in "abc"]
    res = asymptotic_center(tree, leaves)
    assert tree.distance(res.center, tree.vertex("o")) <= 1e-6
    assert res.radius == pytest.approx(1.0, abs=1e-6)
    res = asymptotic_center(tree, leaves, Subtree(tree, ["o", "a"]))
    assert tree.distance(res.center, tree.vertex("o")) <= 1e-6


def test_segment_constraint(hyp):
    S = Segment(hyp, hyp_point(1.0, 0.5), hyp_point(1.0, 2.5))
    pts = [hyp_point(2.0, 1.5)]
    res = asymptotic_center(hyp, pts, S)
    assert hyp.distance(res.center, S.project(pts[0])) <= 1e-6


def test_linf_rejected(linf):
    with pytest.raises(InvalidInputError):
        asymptotic_center(linf, [linf.validate((0, 0))])


def test_default_windows():
    w = default_windows(100)
    assert w[0] == {"start": 50, "stop": None, "stride": 1}
    assert {x["stride"] for x in w} == {1, 2, 3}


def test_delta_consistent_on_resolvent(cat0):
    rng = np.random.default_rng(2)
    a, x0 = cat0.sample(rng, 2)
    tr = picard_trace(Resolvent(SquaredDistance(cat0, a), 1.0), x0, 200)
    rep = delta_convergence_diagnostic(tr)
    assert rep.verdict == "CONSISTENT"
    assert all(cat0.distance(c, a) <= 1e-6 for c in rep.centers)


def test_delta_constant_trace(euclid):
    B = Ball(euclid, (0, 0), 1)
    tr = picard_trace(Projection(euclid, B), (0.3, 0.2), 40)
    rep = delta_convergence_diagnostic(tr)
    assert rep.consistent and rep.spread == 0.0


def test_delta_translation(euclid):
    tr = picard_trace(Translation(euclid, (0.3, 0)), (0, 0), 400)
    rep = delta_convergence_diagnostic(tr)
    assert rep.verdict == "NOT CONSISTENT"
    j = rep.to_json()
    assert set(j) >= {"windows", "centers", "spread", "residual", "verdict"} and j["note"] == FINITE_NOTE

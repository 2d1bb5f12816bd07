import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geofne.errors import InvalidInputError, InvalidPointError
from geofne.model_spaces import (EuclideanSpace, HyperboloidSpace, LinfSpace, TreePoint, TreeSpace,
                                 make_space, tripod)

from geofne.space_core import distance

from conftest import hyp_point

TRIPOD = {"model": "tree", "tree": {"edges": [["o", "a", 1.0], ["o", "b", 1.0], ["o", "c", 1.0]]}}


def test_make_space_examples():
    assert distance(make_space({"model": "euclidean", "dim": 2}), [0, 0], [1, 0]) == 1.0
    assert distance(make_space({"model": "linf", "dim": 2}), [0, 0], [1, 2]) == 2.0
    t = make_space(TRIPOD)
    for u, v in itertools.combinations("abc", 2):
        assert t.distance(t.vertex(u), t.vertex(v)) == pytest.approx(2.0)


def test_cn_claims():
    assert make_space({"model": "euclidean", "dim": 2}).cat0
    assert make_space({"model": "hyperboloid", "dim": 2}).cat0
    assert make_space(TRIPOD).cat0
    assert not make_space({"model": "linf", "dim": 2}).cat0


@pytest.mark.parametrize("desc", [
    {"model": "euclidean", "dim": 0},
    {"model": "banana"},
    {"model": "tree", "tree": {"edges": [["a", "b", 1], ["b", "c", 1], ["c", "a", 1]]}},
    {"model": "tree", "tree": {"edges": [["a", "b", 1], ["c", "d", 1], ["a", "b", 2]]}},
    {"model": "tree", "tree": {"edges": [["a", "b", 1], ["c", "d", 1]]}},
    {"model": "tree", "tree": {"edges": [["a", "b", -1]]}},
    [1, 2],
])
def test_make_space_rejects(desc):
    with pytest.raises(InvalidInputError):
        make_space(desc)


def test_descriptor_round_trip():
    for desc in ({"model": "euclidean", "dim": 3}, {"model": "hyperboloid", "dim": 2}, TRIPOD):
        s = make_space(desc)
        s2 = make_space(s.describe())
        x, y = s.sample(np.random.default_rng(0), 2)
        assert s2.distance(x, y) == pytest.approx(s.distance(x, y), rel=1e-14)


def test_point_json_round_trip(cat0):
    rng = np.random.default_rng(5)
    for x in cat0.sample(rng, 20):
        y = cat0.point_from_json(cat0.point_to_json(x))
        assert cat0.distance(x, y) <= 1e-15


def test_tree_path_oracle():
    # caterpillar: a -1- b -2- c, plus d hanging off b with length 0.5
    t = TreeSpace([["a", "b", 1.0], ["b", "c", 2.0], ["b", "d", 0.5]])
    assert t.distance(t.vertex("a"), t.vertex("c")) == pytest.approx(3.0)
    assert t.distance(t.vertex("d"), t.vertex("c")) == pytest.approx(2.5)
    # interior points on different edges go through b
    p, q = t.point(0, 0.25), t.point(1, 1.5)
    assert t.distance(p, q) == pytest.approx(0.75 + 1.5)
    # same edge: plain offset difference
    assert t.distance(t.point(1, 0.5), t.point(1, 1.75)) == pytest.approx(1.25)


def test_tree_vertex_representation_independent():
    t = tripod()
    o_from_a, o_from_b = t.validate((0, 0.0)), t.validate((1, 0.0))
    assert o_from_a == o_from_b == t.vertex("o")


def test_tree_rejects_offsets():
    t = tripod()
    with pytest.raises(InvalidPointError):
        t.validate((0, 1.5))
    with pytest.raises(InvalidPointError):
        t.validate((7, 0.1))


def test_tree_midpoint_crosses_branch():
    t = tripod()
    m = t.convex_combine(t.point(0, 0.5), t.vertex("b"), 0.5)
    assert t.distance(m, t.vertex("o")) == pytest.approx(0.25)
    assert t.distance(m, t.vertex("b")) == pytest.approx(0.75)


def test_hyperboloid_rejects_off_sheet():
    h = HyperboloidSpace(2)
    with pytest.raises(InvalidPointError):
        h.validate([1.0, 1.0, 0.0])
    with pytest.raises(InvalidPointError):
        h.validate([-1.0, 0.0, 0.0])


def test_hyperboloid_small_distances_are_accurate():
    h = HyperboloidSpace(2)
    x = hyp_point(0.7, 0.3)
    for eps in (1e-3, 1e-6, 1e-9):
        v = h.tangent(x, np.array([0.0, eps]))
        length = math.sqrt(v[1] ** 2 + v[2] ** 2 - v[0] ** 2)
        assert h.distance(x, h.exp(x, v)) == pytest.approx(length, rel=1e-6)


@pytest.mark.parametrize("space", [EuclideanSpace(2), LinfSpace(2), HyperboloidSpace(2)], ids=lambda s: s.model)
def test_row_kernels_match_scalar(space):
    rng = np.random.default_rng(11)
    X = np.array(space.sample(rng, 200))
    Y = np.array(space.sample(rng, 200))
    lam = rng.uniform(0, 1, 200)
    d_rows = space.distance_rows(X, Y)
    d_scalar = np.array([space.distance(x, y) for x, y in zip(X, Y)])
    np.testing.assert_allclose(d_rows, d_scalar, rtol=1e-12, atol=1e-12)
    W_rows = space.combine_rows(X, Y, lam)
    W_scalar = np.array([space.convex_combine(x, y, l) for x, y, l in zip(X, Y, lam)])
    np.testing.assert_allclose(W_rows, W_scalar, rtol=1e-10, atol=1e-10)


def _unique_geodesic_grid_check(space, x, y, lam, candidates, tol):
    d = space.distance(x, y)
    target = space.convex_combine(x, y, lam)
    for z in candidates:
        if abs(space.distance(x, z) - lam * d) <= tol and abs(space.distance(z, y) - (1 - lam) * d) <= tol:
            assert space.distance(z, target) <= 20 * tol


def test_hyperboloid_unique_geodesic_grid():
    h = HyperboloidSpace(2)
    grid = np.linspace(-2.0, 2.0, 161)
    candidates = [h.lift(np.array([u, v])) for u in grid for v in grid]
    rng = np.random.default_rng(2)
    for _ in range(3):
        x, y = h.sample(rng, 2)
        _unique_geodesic_grid_check(h, x, y, rng.uniform(0.2, 0.8), candidates, 0.02)


def test_tree_unique_geodesic_grid():
    t = tripod()
    candidates = [t.point(e, s) for e in range(t.n_edges) for s in np.linspace(0, 1, 401)]
    rng = np.random.default_rng(3)
    for _ in range(10):
        x, y = t.sample(rng, 2)
        _unique_geodesic_grid_check(t, x, y, rng.uniform(0.1, 0.9), candidates, 0.003)


def test_linf_is_not_uniquely_geodesic():
    # (0,0) -> (2,0): (1, 0.5) is also a metric midpoint
    s = LinfSpace(2)
    x, y, z = np.array([0.0, 0.0]), np.array([2.0, 0.0]), np.array([1.0, 0.5])
    assert s.distance(x, z) == s.distance(z, y) == 1.0
    assert not s.uniquely_geodesic


lams = st.floats(0.0, 1.0)
seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, lam=lams, mu=lams)
def test_w2_on_random_geodesics(seed, lam, mu):
    rng = np.random.default_rng(seed)
    for space in (HyperboloidSpace(2), tripod()):
        x, y = space.sample(rng, 2)
        a, b = space.convex_combine(x, y, lam), space.convex_combine(x, y, mu)
        assert space.distance(a, b) == pytest.approx(abs(lam - mu) * space.distance(x, y), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(seed=seeds)
def test_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    for space in (EuclideanSpace(2), HyperboloidSpace(2), tripod(), LinfSpace(2)):
        x, y, z = space.sample(rng, 3)
        d = space.distance
        assert d(x, z) <= d(x, y) + d(y, z) + 1e-12
        assert d(x, y) == pytest.approx(d(y, x), abs=1e-14)


def test_sample_near_stays_in_radius(cat0):
    rng = np.random.default_rng(4)
    c = cat0.sample(rng, 1)[0]
    for _ in range(50):
        assert cat0.distance(c, cat0.sample_near(rng, c, 0.3)) <= 0.3 + 1e-12

import numpy as np
import pytest

from geofne.convex_sets import Ball, Segment, Subtree
from geofne.errors import DomainError, InvalidInputError
from geofne.functionals import Distance, Indicator, SquaredDistance, WeightedSum
from geofne.operators import (DEFAULT_LAMBDA_GRID, Bruck, Composition, Negation, Projection,
                              Resolvent, Translation, TwoPointSwap, apply, bruck_transform,
                              firm_nonexpansiveness_audit, identity, make_operator)

from conftest import hyp_point


def test_apply_examples(euclid):
    np.testing.assert_allclose(apply(Projection(euclid, Ball(euclid, (0, 0), 1)), (3, 0)), (1, 0))
    np.testing.assert_allclose(apply(Negation(euclid), (1, 2)), (-1, -2))
    S = TwoPointSwap(euclid, (0, 0), (1, 0))
    np.testing.assert_allclose(apply(S, (0, 0)), (1, 0))
    np.testing.assert_allclose(apply(S, (1, 0)), (0, 0))


def test_apply_outside_domain(euclid):
    S = TwoPointSwap(euclid, (0, 0), (1, 0))
    with pytest.raises(DomainError):
        S.apply((0.5, 0))
    P = Projection(euclid, Ball(euclid, (0, 0), 1), pieces=[Ball(euclid, (0, 0), 2)])
    with pytest.raises(DomainError):
        P.apply((5, 0))


def test_bruck_identity_and_fixed_points(euclid, hyp):
    for t in (0.1, 0.5, 0.9):
        np.testing.assert_allclose(bruck_transform(identity(euclid), t, (0.3, -2)), (0.3, -2), atol=1e-12)
    P = Projection(hyp, Ball(hyp, hyp_point(0.0), 0.5))
    x = hyp_point(0.2, 1.0)   # inside the ball, so P x = x
    assert hyp.distance(bruck_transform(P, 0.7, x), x) <= 1e-10


def test_bruck_negation_closed_form(euclid):
    for t in (0.25, 0.5, 0.8):
        y = bruck_transform(Negation(euclid), t, (1, 0), tol=1e-13)
        np.testing.assert_allclose(y, ((1 - t) / (1 + t), 0), atol=1e-12)
    np.testing.assert_allclose(bruck_transform(Negation(euclid), 0.5, (1, 0)), (1 / 3, 0), atol=1e-9)


def test_bruck_rejects_bad_t(euclid):
    with pytest.raises(InvalidInputError):
        bruck_transform(identity(euclid), 1.0, (0, 0))
    with pytest.raises(InvalidInputError):
        Bruck(identity(euclid), 0.0)


def test_bruck_needs_nonexpansive_convex_domain(euclid):
    S = TwoPointSwap(euclid, (0, 0), (1, 0))
    with pytest.raises(InvalidInputError):
        Bruck(S, 0.5)


def _fne_library(space):
    rng = np.random.default_rng(0)
    a, b, c = space.sample(rng, 3)
    C = Subtree(space, ["o", "a"]) if space.model == "tree" else Ball(space, c, 0.7)
    ops = {
        "projection-ball": Projection(space, C),
        "projection-segment": Projection(space, Segment(space, a, b)),
        "resolvent-sqdist": Resolvent(SquaredDistance(space, a), 1.3),
        "resolvent-dist": Resolvent(Distance(space, b), 0.8),
        "bruck-projection": Bruck(Projection(space, Segment(space, a, c)), 0.6),
    }
    return ops


def test_fne_library_passes_audit(cat0):
    for name, T in _fne_library(cat0).items():
        rep = firm_nonexpansiveness_audit(T, pairs=60, seed=1)
        assert rep.passed, (name, [r.max_violation for r in rep.results])


def test_generic_resolvent_passes_audit(euclid):
    F = WeightedSum([(1.0, Distance(euclid, (1, 1))), (1.0, Indicator(euclid, Ball(euclid, (0, 0), 1)))])
    rep = firm_nonexpansiveness_audit(Resolvent(F, 1.0), pairs=40, seed=2)
    assert rep.passed


def test_negation_signature(euclid):
    rep = firm_nonexpansiveness_audit(Negation(euclid), pairs=100, seed=3)
    assert not rep.passed
    for r in rep.results:
        # W(x, -x, l) = (1 - 2l) x, so every combined ratio is |2l - 1|
        assert r.combined_ratio_min == pytest.approx(abs(2 * r.lam - 1), abs=1e-9)
        assert r.combined_ratio_max == pytest.approx(abs(2 * r.lam - 1), abs=1e-9)
        assert not r.passed and r.witness_pair is not None
        assert r.nonexpansive_violation <= 1e-12


def test_swap_fails_audit(euclid):
    S = TwoPointSwap(euclid, (0, 0), (1, 0))
    rep = firm_nonexpansiveness_audit(S, pairs=20, seed=0)
    assert not rep.passed
    assert rep.pairs >= 1
    for r in rep.results:
        assert r.combined_ratio_max == pytest.approx(abs(2 * r.lam - 1), abs=1e-9)


def test_translation_is_fne_with_equality(euclid):
    T = Translation(euclid, (0.3, 0))
    rep = firm_nonexpansiveness_audit(T, pairs=50, seed=4)
    assert rep.passed
    assert all(r.combined_ratio_min == pytest.approx(1.0) for r in rep.results)
    assert T.fixed_points() == []


def test_audit_input_errors(euclid):
    with pytest.raises(InvalidInputError):
        firm_nonexpansiveness_audit(identity(euclid), pairs=[])
    with pytest.raises(InvalidInputError):
        firm_nonexpansiveness_audit(identity(euclid), lambda_grid=[1.0], pairs=5)


def test_audit_is_seeded(euclid):
    T = Projection(euclid, Ball(euclid, (0, 0), 1))
    a = firm_nonexpansiveness_audit(T, pairs=30, seed=5).to_json()
    b = firm_nonexpansiveness_audit(T, pairs=30, seed=5).to_json()
    assert a == b
    assert [r["lambda"] for r in a["results"]] == list(DEFAULT_LAMBDA_GRID)
    assert set(a["results"][0]) >= {"lambda", "max_violation", "witness_pair", "pass"}


def test_composition_order(euclid):
    # translate first, then project
    T = Composition([Translation(euclid, (1, 0)), Projection(euclid, Ball(euclid, (0, 0), 1))])
    np.testing.assert_allclose(T.apply((0.5, 0)), (1, 0))


def test_projection_needs_cat0(linf):
    with pytest.raises(InvalidInputError):
        Projection(linf, Ball(linf, (0, 0), 1))


def test_make_operator_round_trip(euclid, tree):
    desc = {"kind": "resolvent", "mu": 2.0, "f": {"kind": "sqdist", "point": [1, 0]},
            "domain": [{"kind": "ball", "center": [0, 0], "radius": 3}]}
    T = make_operator(euclid, desc)
    T2 = make_operator(euclid, T.to_json())
    x = euclid.validate((0.5, 0.5))
    np.testing.assert_allclose(T.apply(x), T2.apply(x))
    B = make_operator(tree, {"kind": "bruck", "t": 0.5,
                             "inner": {"kind": "projection", "set": {"kind": "subtree", "vertices": ["o", "b"]}}})
    assert tree.distance(B.apply(tree.vertex("b")), tree.vertex("b")) <= 1e-9
    S = make_operator(euclid, {"kind": "swap", "points": [[0, 0], [2, 0]]})
    assert len(S.pieces) == 2
    with pytest.raises(InvalidInputError):
        make_operator(euclid, {"kind": "warp"})
    with pytest.raises(InvalidInputError):
        make_operator(euclid, {"kind": "projection"})

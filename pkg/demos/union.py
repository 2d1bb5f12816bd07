"""Fixed points of maps defined on a union of convex pieces."""

from geofne import Ball, EuclideanSpace, Resolvent, SquaredDistance, TwoPointSwap
from geofne.iteration import union_fixed_point_search

e = EuclideanSpace(2)
T = Resolvent(SquaredDistance(e, (0, 0)), 9.0, pieces=[Ball(e, (0, 0), 1), Ball(e, (5, 0), 1)])
res = union_fixed_point_search(T, T.pieces, (5.5, 0.2), window=50)
print("two balls:", res.classification, res.point, "residual", res.residual)

S = TwoPointSwap(e, (0, 0), (1, 0))
res = union_fixed_point_search(S, S.pieces, (1, 0), window=20)
print("two-point swap:", res.classification, "period", res.period)

"""Resolvents of convex functionals and the identity J_{(1-l)mu}(W(x, J_mu x, l)) = J_mu x."""

import numpy as np

from geofne import Distance, Indicator, Ball, SquaredDistance, WeightedSum, resolvent, tripod

space = tripod()
rng = np.random.default_rng(0)
a, x = space.sample(rng, 2)
F = WeightedSum([(1.0, SquaredDistance(space, a)), (1.0, Distance(space, space.vertex("b")))])
mu = 1.5
y = resolvent(F, mu, x)
for lam in (0.25, 0.5, 0.75):
    y2 = resolvent(F, (1 - lam) * mu, space.convex_combine(x, y, lam))
    print(f"lambda={lam}: identity residual {space.distance(y, y2):.2e}")

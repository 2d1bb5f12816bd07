"""Proximal point algorithm on H^2 with constant steps 1/2: the distance halves each step."""

import numpy as np

from geofne import HyperboloidSpace, SquaredDistance, proximal_point_run

hyp = HyperboloidSpace(2)
a, x0 = hyp.sample(np.random.default_rng(1), 2)
run = proximal_point_run(SquaredDistance(hyp, a), [0.5] * 12, x0, 12)
for n, x in enumerate(run.trace.points):
    print(f"n={n:2d}  d(x_n, a)={hyp.distance(x, a):.3e}")
print(run.diagnostic)

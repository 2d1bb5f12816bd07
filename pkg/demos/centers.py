"""Asymptotic centers and the Delta-convergence diagnostic."""

from geofne import (EuclideanSpace, Resolvent, SquaredDistance, Translation, asymptotic_center,
                    delta_convergence_diagnostic, picard_trace)

e = EuclideanSpace(2)
res = asymptotic_center(e, [e.validate(p) for p in [(0, 0), (2, 0)] * 5])
print("alternating pair: center", res.center, "radius", round(res.radius, 9))

fne = picard_trace(Resolvent(SquaredDistance(e, (1, 1)), 1.0), (3, -2), 200)
shift = picard_trace(Translation(e, (0.3, 0)), (0, 0), 200)
print("resolvent orbit:", delta_convergence_diagnostic(fne).verdict)
print("translation orbit:", delta_convergence_diagnostic(shift).verdict)

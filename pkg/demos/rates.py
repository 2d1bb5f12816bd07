"""Picard iteration of a resolvent, displacement analytics and rate certificates."""

from geofne import (EuclideanSpace, Resolvent, SquaredDistance, Translation, certify_asymptotic_regularity,
                    displacement_analytics, picard_trace, rate_bound)

e = EuclideanSpace(2)
trace = picard_trace(Resolvent(SquaredDistance(e, (0, 0)), 0.1), (1.5, 0.5), 3000)
for kind in ("Phi", "PhiTilde", "Psi"):
    cert = rate_bound(kind, 0.1, 0.5, 2.0)
    v = certify_asymptotic_regularity(trace, cert)
    print(f"{kind:9s} bound {cert.bound:>9d}  {v.status}{' (extrapolated)' if v.extrapolated else ''}")

a = displacement_analytics(picard_trace(Translation(e, (0.3, 0)), (0, 0), 10_000))
print("translation: R_1..R_5 =", [round(a.R[k], 12) for k in range(1, 6)], "L =", round(a.L, 12))

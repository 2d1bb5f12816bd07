"""Audit firm nonexpansiveness: a projection passes, negation fails with ratio |2 lambda - 1|."""

from geofne import Ball, EuclideanSpace, HyperboloidSpace, Negation, Projection, firm_nonexpansiveness_audit

hyp = HyperboloidSpace(2)
P = Projection(hyp, Ball(hyp, hyp.origin, 0.8))
print("projection onto an H^2 ball:", "PASS" if firm_nonexpansiveness_audit(P, pairs=100).passed else "FAIL")

e = EuclideanSpace(2)
rep = firm_nonexpansiveness_audit(Negation(e), pairs=100)
for r in rep.results:
    print(f"negation  lambda={r.lam:.1f}  ratio={r.combined_ratio_max:.3f}  |2l-1|={abs(2 * r.lam - 1):.3f}  "
          f"violation={r.max_violation:.3f}")

"""Randomized axiom checks: three CAT(0) models pass, the max-norm plane fails CN-."""

from geofne import EuclideanSpace, HyperboloidSpace, LinfSpace, Sampler, tripod, verify_space_axioms

for space in (EuclideanSpace(2), HyperboloidSpace(2), tripod()):
    rep = verify_space_axioms(space, Sampler(seed=0, count=2000))
    worst = max(rep[n].max_violation for n in rep.names())
    print(f"{space.model:12s} pass={rep.passed}  worst violation {worst:.2e}")

rep = verify_space_axioms(LinfSpace(2), Sampler(seed=0, count=2000), check_cn=True)
print(f"{'linf':12s} pass={rep.passed}  stored CN- witness violation {rep['CN- stored witness'].max_violation}")

"""Geodesic metric spaces, firmly nonexpansive maps and their fixed-point iterations.

Model spaces (Euclidean, hyperboloid H^2, finite metric trees, the max-norm
plane), convex sets and projections, convex functionals and resolvents,
operator audits, Picard iteration with rate certificates, asymptotic centers,
and a randomized axiom checker.
"""

from .axiom_verifier import (AxiomReport, ModulusDescriptor, Sampler, cat0_modulus, make_modulus,
                             modulus_audit, power_modulus, verify_space_axioms)
from .centers import (SequenceWindow, asymptotic_center, asymptotic_radius,
                      delta_convergence_diagnostic)
from .convex_sets import Ball, Halfspace, Segment, Subtree, WholeSpace, contains, make_set, project
from .errors import (DomainError, InvalidInputError, InvalidPointError, NonconvergenceError,
                     UnboundedOrbitError)
from .functionals import (Distance, Indicator, ResolventParams, SetDistance, SquaredDistance,
                          WeightedSum, difference_quotients, directional_derivative, make_functional,
                          minimizer_test, moreau_yosida_value, resolvent)
from .iteration import (certify_asymptotic_regularity, displacement_analytics, fejer_audit,
                        picard_trace, proximal_point_run, rate_bound, union_fixed_point_search)
from .model_spaces import (EuclideanSpace, HyperboloidSpace, LinfSpace, TreeSpace, make_space,
                           tripod)
from .operators import (Bruck, Composition, Negation, Projection, Resolvent, Translation,
                        TwoPointSwap, bruck_transform, firm_nonexpansiveness_audit, identity,
                        make_operator)
from .space_core import GeodesicSpace, chain_parameter, convex_combine, distance, lies_between

__version__ = "0.1.0"

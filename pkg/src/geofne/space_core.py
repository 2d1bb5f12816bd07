"""Geodesic-space interface: a metric together with a convexity mapping.

Every model space implements :class:`GeodesicSpace`. Points are plain values:
read-only ``numpy`` vectors for the coordinate models and
:class:`~geofne.model_spaces.TreePoint` tuples for metric trees. The
module-level functions below are thin, validated entry points that the rest
of the package (and users) call instead of the methods directly.
"""

import abc
import math

import numpy as np

from .errors import InvalidInputError

#: Two points closer than this (in metric units) are considered equal.
POINT_TOL = 1e-9


class GeodesicSpace(abc.ABC):
    """A metric space ``(X, d)`` with a convexity mapping ``W``.

    Subclasses set the class attributes below and implement the abstract
    methods. Instances are immutable after construction.

    Attributes
    ----------
    model : str
        Model tag used in JSON descriptors.
    cat0 : bool
        Whether the space claims the CN- inequality (i.e. is CAT(0)).
    uniquely_geodesic : bool
        Whether ``W`` is the unique geodesic between any two points.
    tol : float
        Tolerance used for point validation and equality.
    """

    model = "abstract"
    cat0 = False
    uniquely_geodesic = False

    def __init__(self, tol=POINT_TOL):
        self.tol = float(tol)

    # -- required -----------------------------------------------------
    @abc.abstractmethod
    def validate(self, x):
        """Return ``x`` in canonical internal form or raise InvalidPointError."""

    @abc.abstractmethod
    def distance(self, x, y):
        """Metric ``d(x, y)``; inputs are assumed validated."""

    @abc.abstractmethod
    def convex_combine(self, x, y, lam):
        """Convexity mapping ``W(x, y, lam)``; inputs are assumed validated."""

    @abc.abstractmethod
    def sample(self, rng, n, region=None):
        """Draw ``n`` points from a bounded sampling region of the space."""

    @abc.abstractmethod
    def sample_near(self, rng, center, radius):
        """Draw one point at distance at most ``radius`` from ``center``."""

    @abc.abstractmethod
    def describe(self):
        """JSON-ready descriptor that :func:`~geofne.model_spaces.make_space` accepts."""

    @abc.abstractmethod
    def point_to_json(self, x):
        """Serialize a point."""

    @abc.abstractmethod
    def point_from_json(self, obj):
        """Parse a serialized point."""

    # -- shared -------------------------------------------------------
    def equal(self, x, y, tol=None):
        tol = self.tol if tol is None else tol
        return self.distance(x, y) <= tol

    def extrapolate(self, x, y, lam):
        """Point at parameter ``lam`` on a geodesic line through ``x`` and ``y``.

        Only defined where geodesics extend (vector models); ``lam`` may lie
        outside ``[0, 1]``.
        """
        raise NotImplementedError(f"{self.model} space has no geodesic extension")

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()!r})"


def _check_lambda(lam, name="lambda"):
    lam = float(lam)
    if not (0.0 <= lam <= 1.0) or math.isnan(lam):
        raise InvalidInputError(f"{name} must lie in [0, 1], got {lam}")
    return lam


def distance(space, x, y):
    """Distance between two points of ``space``.

    Raises :class:`~geofne.errors.InvalidPointError` if either payload is not
    a point of the model.
    """
    return space.distance(space.validate(x), space.validate(y))


def convex_combine(space, x, y, lam):
    """The point ``(1 - lam) x (+) lam y`` on the geodesic from ``x`` to ``y``.

    ``lam = 0`` returns ``x`` and ``lam = 1`` returns ``y`` exactly.
    """
    lam = _check_lambda(lam)
    return space.convex_combine(space.validate(x), space.validate(y), lam)


def lies_between(space, x, y, z, tol=POINT_TOL):
    """Whether ``y`` lies between ``x`` and ``z``.

    The three points must be pairwise distinct (farther apart than ``tol``);
    the test is ``|d(x, z) - d(x, y) - d(y, z)| <= tol``.
    """
    x, y, z = space.validate(x), space.validate(y), space.validate(z)
    dxy = space.distance(x, y)
    dyz = space.distance(y, z)
    dxz = space.distance(x, z)
    if min(dxy, dyz, dxz) <= tol:
        raise InvalidInputError("betweenness needs pairwise distinct points")
    return abs(dxz - dxy - dyz) <= tol


def chain_parameter(lam, alpha):
    """Reparametrization ``mu`` of a point on a sub-geodesic.

    If ``y = (1-lam) x + lam z`` and ``z = (1-alpha) x + alpha w`` then
    ``z = (1-mu) y + mu w`` with ``mu = (1-lam) alpha / (1 - alpha lam)``.
    Both parameters must lie strictly inside ``(0, 1)``.
    """
    lam, alpha = float(lam), float(alpha)
    for name, v in (("lambda", lam), ("alpha", alpha)):
        if not (0.0 < v < 1.0):
            raise InvalidInputError(f"{name} must lie in the open interval (0, 1), got {v}")
    return (1.0 - lam) * alpha / (1.0 - alpha * lam)


def frozen_vector(values):
    """Read-only float64 copy of ``values``."""
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr

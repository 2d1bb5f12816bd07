"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """An argument violates an operation's precondition."""


class InvalidPointError(InvalidInputError):
    """A payload is not a valid point of the space it was given to."""


class DomainError(InvalidInputError):
    """A point (or iterate) lies outside an operator's domain.

    ``index`` is the iteration step at which the problem occurred, when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UnboundedOrbitError(InvalidInputError):
    """An orbit left the configured boundedness cap."""

    def __init__(self, message, index=None, distance=None):
        super().__init__(message)
        self.index = index
        self.distance = distance


class NonconvergenceError(RuntimeError):
    """An inner solver stopped before reaching its tolerance.

    The best iterate found so far is kept on ``best`` so callers can decide
    whether it is good enough.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual

"""Exception hierarchy shared by all fiberlift modules."""


class FiberliftError(Exception):
    """Base class for every error raised by fiberlift."""


class ParameterError(FiberliftError, ValueError):
    """A constructor or routine received a parameter outside its range."""


class DomainViolation(FiberliftError, ValueError):
    """A point left the declared phase space of a system or measure."""

    def __init__(self, message, point=None, step=None):
        super().__init__(message)
        self.point = point
        self.step = step


class PreconditionError(FiberliftError, ValueError):
    """Inputs are individually valid but violate a joint precondition."""


class InfeasibleError(FiberliftError, ValueError):
    """Requested construction does not exist for the given exponents/rates."""


class CapabilityError(FiberliftError, NotImplementedError):
    """The system lacks metadata needed by the requested method."""


class ConvergenceError(FiberliftError, RuntimeError):
    """An iterative method hit its iteration cap."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

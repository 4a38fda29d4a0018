"""Exception hierarchy shared by every ratevol module."""


class RatevolError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RatevolError, ValueError):
    """A parameter set or request violates an admissibility condition."""


class DomainError(RatevolError, ValueError):
    """A state variable lies outside the model state space."""


class PoleError(RatevolError, ZeroDivisionError):
    """A special function was evaluated at a pole."""


class ConvergenceError(RatevolError, ArithmeticError):
    """A series, recurrence or quadrature failed to converge within its budget."""


class BranchError(RatevolError, ArithmeticError):
    """A principal-branch discontinuity was detected along an integration contour."""


class StripError(RatevolError, ValueError):
    """A payoff transform was evaluated outside its strip of analyticity."""


class ImaginaryResidueError(RatevolError, ArithmeticError):
    """A quantity that must be real came back with a non-negligible imaginary part."""


class ArbitrageBoundsError(RatevolError, ValueError):
    """An option price lies outside the static no-arbitrage bounds."""


class BranchWarning(UserWarning):
    """A principal logarithm was taken close to its branch cut."""


class HeavyTailWarning(UserWarning):
    """A Monte Carlo estimate is dominated by a handful of samples."""

"""Exception types shared across the package.

Validation errors subclass ValueError so callers can catch either the
specific class or the built-in.
"""


class BoundedAgentsError(Exception):
    """Base class for all package errors."""


class ValidationError(BoundedAgentsError, ValueError):
    """Invalid user-supplied input."""


class NonStochasticError(ValidationError):
    """A probability vector does not sum to 1 within tolerance."""


class BadPayoffSignError(ValidationError):
    """Risky payoffs must satisfy xG > 0 > xB."""


class BadFlipProbError(ValidationError):
    """Nature flip probability must lie in (0, 0.5]."""


class SignalOutOfRangeError(ValidationError):
    """A signal index is outside 1..k."""


class BadProbabilityError(ValidationError):
    """A probability is outside [0, 1]."""


class BadEtaError(ValidationError):
    """Stopping probability must lie in (0, 1]."""


class DimensionMismatchError(ValidationError):
    """Policy and setting disagree on the signal count, or shapes clash."""


class TrivialSettingError(ValidationError):
    """The setting carries no information (pG == pB everywhere)."""


class TooManySignalsError(ValidationError):
    """Exhaustive partition search supports at most 6 signals."""


class GridTooLargeError(ValidationError):
    """Brute-force enumeration exceeds the candidate cap."""


class LengthMismatchError(ValidationError):
    """A supplied sequence has the wrong length."""


class MismatchedProblemsError(ValidationError):
    """Two reader problems differ in more than the prior."""


class NoMachinesError(ValidationError):
    """A machine-selection problem has no machines."""


class MissingUtilityEntryError(BoundedAgentsError):
    """The utility table lacks an entry a machine can produce."""


class ReducibleChainError(BoundedAgentsError):
    """The joint chain is not irreducible; stationary analysis is undefined.

    Carries the offending state labels in ``unreachable`` (states the initial
    pattern analysis found cut off in either direction).
    """

    def __init__(self, message, unreachable=()):
        super().__init__(message)
        self.unreachable = tuple(unreachable)


class SolveFailedError(BoundedAgentsError):
    """The stationary linear solve failed or left too large a residual."""

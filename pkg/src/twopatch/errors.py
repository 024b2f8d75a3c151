"""Exception hierarchy shared by all modules."""


class TwoPatchError(Exception):
    """Base class for every error raised by this package."""


class InadmissibleParameters(TwoPatchError):
    pass


class NonconvergentAmplitude(TwoPatchError):
    pass


class SubcriticalSpeed(TwoPatchError):
    pass


class TailFitFailed(TwoPatchError):
    pass


class DomainTooShort(TwoPatchError):
    pass


class MisalignedInterface(TwoPatchError):
    pass


class CflViolation(TwoPatchError):
    pass


class PositivityLost(TwoPatchError):
    pass


class NotConverged(TwoPatchError):
    pass


class OutsideValidityWindow(TwoPatchError):
    pass


class LevelNotCrossed(TwoPatchError):
    pass


class InsufficientSamples(TwoPatchError):
    pass


class WindowEmpty(TwoPatchError):
    pass


class BoundaryGuardViolation(TwoPatchError):
    """The truncated domain is too short for the requested run."""


class BoundExceeded(TwoPatchError):
    """A snapshot rose above the a-priori upper bound of the Cauchy problem."""

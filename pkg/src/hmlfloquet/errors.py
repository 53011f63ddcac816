"""Exception types raised across the package."""


class HMLError(Exception):
    """Base class for all package errors."""


class GridMisaligned(HMLError, ValueError):
    """Drive switch times do not fall on grid nodes."""


class StepTooLarge(HMLError, ValueError):
    """Time step too coarse for the fastest phase winding in the model."""


class DomainError(HMLError, ValueError):
    """Amplitude outside the physical disk |c| <= 1."""


class NonPhysical(HMLError, ValueError):
    """State violates positivity or the uncertainty relation."""


class ConfigError(HMLError, ValueError):
    """Run configuration could not be parsed or validated."""


class NumericalFailure(HMLError, ArithmeticError):
    """A solver produced non-finite or out-of-domain values."""

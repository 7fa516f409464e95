"""Exception hierarchy shared by all census modules."""


class CensusError(Exception):
    """Base class for every error raised by orbicensus."""


class ConfigurationError(CensusError, ValueError):
    """A parameter lies outside the supported range (sieve limits, precision, ...)."""


class DomainError(CensusError, ValueError):
    """An argument violates a mathematical precondition."""


class IncompleteTableError(CensusError):
    """A prime table is too small for the requested computation."""


class NonHyperbolicError(DomainError):
    """A trace of absolute value at most 2 (parabolic or elliptic element)."""


class FitError(CensusError):
    """A model fit was requested on degenerate data."""

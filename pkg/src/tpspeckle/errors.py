"""Exception types shared across the package."""


class TpspeckleError(Exception):
    """Base class for all package errors."""


class MonochromaticPumpError(TpspeckleError):
    """Amplitude evaluation requested for a cw pump (sigma = 0).

    The monochromatic state is a distribution, not a square-integrable
    function; use the closed-form rate limits instead.
    """


class GridTooNarrowError(TpspeckleError):
    """The frequency grid clips a non-negligible part of the integrand."""


class DegenerateStateError(TpspeckleError):
    """The symmetrized-state norm vanishes (theta near pi with s near 0)."""


class NotPositiveSemidefiniteError(TpspeckleError):
    """Covariance matrix needs more diagonal jitter than the budget allows."""


class QuadratureNotConvergedError(TpspeckleError):
    """Richardson error estimate of a numeric rate exceeds the tolerance."""


class InsufficientRealizationsError(TpspeckleError):
    """Monte Carlo standard error exceeds the requested tolerance."""


class TailNotConvergedError(TpspeckleError):
    """Rate curve has no converged large-delay tail to define R(inf)."""


class RangeError(TpspeckleError):
    """Argument outside the documented accuracy range."""

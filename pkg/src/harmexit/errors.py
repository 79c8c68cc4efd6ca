"""Exception types shared across the package."""


class HarmexitError(Exception):
    """Base class for all package errors."""


class DomainError(HarmexitError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class UsageError(HarmexitError, ValueError):
    """Incompatible combination of arguments (e.g. regime/parameter mismatch)."""


class HypothesisViolation(DomainError):
    """Re(lambda) is at or below the top of the spectrum -rho**2."""


class EscapeError(HarmexitError, RuntimeError):
    """A simulated path failed to exit the ball before ``max_time``."""


class ShootingError(HarmexitError, RuntimeError):
    """The radial shooting integration did not produce a usable solution."""


class SeriesUnavailable(HarmexitError, RuntimeError):
    """The spectral series is unreliable at this time; use Monte Carlo instead."""


class CheckFailure(HarmexitError, AssertionError):
    """A numerical verification check failed (e.g. an unbounded fitted ratio)."""

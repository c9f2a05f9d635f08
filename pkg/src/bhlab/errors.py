"""Exception types raised across the package."""


class BHLabError(Exception):
    """Base class for all package errors."""


class InvalidSiteError(BHLabError, ValueError):
    pass


class DimensionCapError(BHLabError):
    """Requested basis or matrix is larger than the configured cap."""


class OutOfTruncationError(BHLabError, KeyError):
    """State has total occupation above the basis cutoff."""

    def __str__(self):
        return str(self.args[0]) if self.args else "state outside truncation"


class ValidationError(BHLabError, ValueError):
    pass


class DomainError(BHLabError, ValueError):
    """Inputs fall outside the range where a bound or formula applies."""

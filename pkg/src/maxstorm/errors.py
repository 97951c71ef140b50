"""Exception hierarchy shared across the package.

Every error raised on purpose derives from :class:`MaxstormError` so the
command-line layer can map failures onto stable exit codes:

* validation and capability problems -> exit code 2
* file format and I/O problems       -> exit code 3
* numerical and resource problems    -> exit code 4
"""

from __future__ import annotations

__all__ = [
    "MaxstormError",
    "ValidationError",
    "CapabilityError",
    "DegeneratePairError",
    "FieldFormatError",
    "NumericalError",
    "ResourceError",
]


class MaxstormError(Exception):
    """Base class for all errors raised deliberately by this package."""


class ValidationError(MaxstormError):
    """Invalid argument, parameter, or configuration value."""


class CapabilityError(ValidationError):
    """Request outside the supported envelope (e.g. too many joint points)."""


class DegeneratePairError(ValidationError):
    """Observation pair with no absolutely continuous joint density."""


class FieldFormatError(MaxstormError):
    """Malformed field file; message cites the offending line."""


class NumericalError(MaxstormError):
    """Numerical routine failed to converge or produced a non-finite value."""


class ResourceError(MaxstormError):
    """A configured resource cap (storm count, matrix size) was exceeded."""

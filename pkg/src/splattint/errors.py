"""Exception types shared across the package."""


class SplattintError(ValueError):
    """Base class for all package-specific errors."""


class FormatError(SplattintError):
    """Malformed container: bad header, wrong encoding, missing property."""


class DataError(SplattintError):
    """Well-formed container holding invalid values (NaN, zero-norm quaternion)."""


class ValidationError(SplattintError):
    """Input that violates a documented precondition."""

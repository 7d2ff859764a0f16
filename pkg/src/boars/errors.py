"""Shared exception types."""


class BoarsError(Exception):
    """Base class for all package errors."""


class GridFormatError(BoarsError):
    """Raised when a grid file is missing, malformed, or inconsistent."""


class DegenerateSpectrumError(BoarsError):
    """Raised when a spectrum is constant and cannot be min-max normalized."""


class PhaseError(BoarsError):
    """Raised when an operation is invoked in the wrong target phase."""


class SurrogateError(BoarsError):
    """Raised on GP fitting or factorization failures."""


class SessionError(BoarsError):
    """Raised on invalid session transitions or unknown sessions."""

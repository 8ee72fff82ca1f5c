"""Exception hierarchy shared across the package.

Each class carries the CLI exit code used when the error escapes to the
command line (0 success, 2 I/O, 3 DSP, 4 data validation, 5 remote service).
"""


class SippError(Exception):
    exit_code = 1


class AudioIOError(SippError):
    """File system or WAV encoding/decoding failure."""

    exit_code = 2


class DspError(SippError):
    """Signal processing failure (degenerate input, length mismatch, ...)."""

    exit_code = 3


class DataError(SippError):
    """Invalid user-supplied data or configuration."""

    exit_code = 4


class ServiceError(SippError):
    """Remote endpoint unreachable, misbehaving, or out of contract."""

    exit_code = 5


class ParseShortfallError(ServiceError):
    """LLM reply contained fewer candidates than requested (retryable)."""


class ClipWarning(UserWarning):
    """Samples outside [-1, 1] were clipped while writing a WAV file."""

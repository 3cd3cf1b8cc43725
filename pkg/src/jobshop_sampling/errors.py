"""Exception types raised by the engine."""


class JobShopError(Exception):
    """Base class for all errors raised by this package."""


class InstanceFormatError(JobShopError):
    """A problem file could not be parsed.

    Carries the 1-based line and column of the offending token when known.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + location)
        self.line = line
        self.column = column


class InfeasibleActionError(JobShopError):
    """A dispatch was requested for a job with no remaining operations."""


class EnumerationCapError(JobShopError):
    """Exhaustive enumeration would exceed the configured sequence cap."""

    def __init__(self, sequence_count: int, cap: int):
        super().__init__(
            f"instance has {sequence_count} dispatch sequences, exceeding the cap of {cap}"
        )
        self.sequence_count = sequence_count
        self.cap = cap


class PolicyTransportError(JobShopError):
    """The external policy endpoint is unreachable or broke the wire protocol."""


class ProtocolVersionError(PolicyTransportError):
    """The external policy answered the handshake with an unsupported version."""


class PolicyValidationError(JobShopError):
    """An external policy reply violated the priority-vector contract."""

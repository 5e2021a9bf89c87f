"""Exception hierarchy shared by all wisense modules."""


class WisenseError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(WisenseError, ValueError):
    """Invalid scenario, channel, or detector configuration."""

    def __init__(self, message, field=None, line=None):
        self.reason = message
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"{field}: "
        super().__init__(prefix + message)


class AliasingError(ConfigError):
    """Sample rate too low for the modeled motion."""


class ValidationError(WisenseError, ValueError):
    """A trace or frame violates its structural invariants."""


class SubcarrierIndexError(WisenseError, IndexError):
    """Subcarrier index outside ``[0, num_subcarriers)``."""


class InputError(WisenseError, ValueError):
    """Non-finite or otherwise unusable sample."""


class InsufficientDataError(WisenseError, ValueError):
    """Not enough samples for the requested analysis window."""


class NoPeriodicityError(WisenseError):
    """Fewer than two qualifying peaks were found."""


class TraceFormatError(WisenseError):
    """Input is not a wisense trace (bad magic, version, or header)."""


class CorruptTraceError(TraceFormatError):
    """Trace file ends in the middle of a record."""

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class ReplayAborted(WisenseError):
    """The replay consumer raised; carries the number of slots delivered."""

    def __init__(self, delivered, cause):
        self.delivered = delivered
        self.cause = cause
        super().__init__(f"consumer failed after {delivered} slots: {cause!r}")

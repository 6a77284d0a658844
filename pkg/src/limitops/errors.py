"""Exception types shared across the package."""


class LimitOpsError(Exception):
    """Base class for every error raised by limitops."""


class ConfigurationError(LimitOpsError, ValueError):
    """An input is well-formed but incompatible (term vs space kind, bad strategy, ...)."""


class DomainError(LimitOpsError, ValueError):
    """An argument lies outside the domain of an operation."""


class InconclusiveError(LimitOpsError, RuntimeError):
    """A finite procedure could not reach a decision at the requested horizon."""


class OracleUnavailable(LimitOpsError):
    """The exact symbol oracle does not apply to this operator."""

"""Exception types raised across the package."""


class NoisyRadError(Exception):
    """Base class for all package errors."""


class DimensionError(NoisyRadError, ValueError):
    pass


class HermiticityError(NoisyRadError, ValueError):
    pass


class ParameterError(NoisyRadError, ValueError):
    pass


class UnsupportedEnumeration(NoisyRadError):
    """Raised when a class containing parameterized slots is enumerated."""


class ResourceCapError(NoisyRadError):
    """Raised when a computation would exceed a configured size cap."""


class PreconditionError(NoisyRadError):
    """A bound was requested for inputs that violate its hypotheses.

    ``evidence`` carries the object explaining the failure, typically an
    :class:`~noisyrad.channels.Incompatible`.
    """

    def __init__(self, message, evidence=None):
        super().__init__(message)
        self.evidence = evidence


class UnboundedError(NoisyRadError):
    pass


class SolverError(NoisyRadError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SingularChannelError(NoisyRadError):
    pass


class ConfigError(NoisyRadError):
    """Invalid experiment configuration; ``field`` names the offender."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field

"""Exception hierarchy shared by every module."""


class InterfaceLabError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(InterfaceLabError, ValueError):
    """An argument violates a documented precondition."""


class ConfigError(InvalidArgumentError):
    """An experiment configuration failed validation."""


class NoInterfaceError(InterfaceLabError):
    """The field or pattern has no interface at the requested level."""


class ResolutionError(InterfaceLabError):
    """The grid is too coarse for the requested construction."""


class PackingError(InterfaceLabError):
    """Particles cannot be placed in a cube with the required spacing."""

    def __init__(self, message, cube_index=None):
        super().__init__(message)
        self.cube_index = cube_index


class StepSizeError(InterfaceLabError):
    """The gradient flow could not find an energy-decreasing step."""


class InfeasibleGeometryError(InterfaceLabError):
    """A parametric pattern cannot be realized with the given parameters."""


class EmptyAuditError(InterfaceLabError):
    """Every vertex of an audited interface was masked."""


class UnsupportedConfigurationError(InterfaceLabError):
    """The requested analysis is not defined for this configuration."""


#: Exceptions that signal numerical infeasibility rather than bad input.
NUMERICAL_ERRORS = (
    NoInterfaceError,
    ResolutionError,
    PackingError,
    StepSizeError,
    InfeasibleGeometryError,
    EmptyAuditError,
    UnsupportedConfigurationError,
)

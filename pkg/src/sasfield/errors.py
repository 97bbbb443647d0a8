"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: configuration problems exit with 2,
resource problems with 3 and data problems with 4.
"""


class SasFieldError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(SasFieldError, ValueError):
    """Invalid parameter, unknown name or inconsistent configuration."""

    exit_code = 2

    def __init__(self, message, violations=None):
        self.violations = list(violations) if violations else [message]
        super().__init__(message)


class UnsupportedKernelError(ConfigError):
    """The requested analysis needs structure the kernel does not carry."""


class ResourceError(SasFieldError):
    """A grid, lattice or sample budget would be exceeded."""

    exit_code = 3


class EfficiencyError(ResourceError):
    """A sampler would accept too rarely to be practical."""


class NumericRangeError(SasFieldError, ArithmeticError):
    """A kernel value or series term is not finite."""

    exit_code = 3


class DataError(SasFieldError, ValueError):
    """Input data violates the precondition of a statistic."""

    exit_code = 4


class ShapeError(DataError):
    """Array lengths or shapes do not match."""

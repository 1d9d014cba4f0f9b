"""Error taxonomy shared across the package.

Every failure raised on purpose derives from AkgnnError so callers can
catch the package's own diagnostics separately from genuine bugs.
"""


class AkgnnError(Exception):
    """Base class for all errors raised by this package."""


class DataError(AkgnnError):
    """Malformed or inconsistent input data (files, edges, labels, splits)."""


class DimensionError(AkgnnError):
    """Operands with incompatible shapes reached an operation."""


class ConfigError(AkgnnError):
    """A configuration value is outside its documented domain."""


class NumericError(AkgnnError):
    """A numeric input is non-finite or otherwise unusable."""


class ContractError(AkgnnError):
    """An internal pre/post-condition was violated by the caller."""


class DegenerateKernelError(AkgnnError):
    """The adaptive kernel is undefined for this graph/parameter pair."""

"""Exception hierarchy.

Three families map onto CLI exit codes: configuration problems (2), bad or
inconsistent data (3) and experiments that cannot be carried out (4).
"""


class FreqRegError(Exception):
    """Base class for all library errors."""


class ConfigError(FreqRegError, ValueError):
    pass


class DataError(FreqRegError, ValueError):
    pass


class InfeasibleError(FreqRegError, ValueError):
    pass


# battery
class BoundsViolation(DataError):
    pass


class InvalidDispatch(DataError):
    pass


# rainflow
class EmptySeries(DataError):
    pass


class OutOfRangeDepth(DataError):
    pass


class NonMonotoneStress(ConfigError):
    pass


# control
class SignalEmpty(DataError):
    pass


class InstanceTooLarge(InfeasibleError):
    pass


# performance
class ZeroInstructionEnergy(UserWarning):
    """Index defaulted to 1 because nothing was instructed."""


class DegenerateSeries(UserWarning):
    """Correlation undefined for a constant series; precision substituted."""


# bidding
class ZeroCapacity(DataError):
    pass


class InsufficientData(DataError):
    pass


class OutOfRange(InfeasibleError):
    pass


class CapExceeded(InfeasibleError):
    pass


class NonInvertible(InfeasibleError):
    pass


# market
class LengthMismatch(DataError):
    pass


# signal
class ParseError(DataError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class GapError(DataError):
    pass


class BadParams(ConfigError):
    pass


class Degenerate(DataError):
    pass


class SignalClipWarning(UserWarning):
    pass

"""Exception types raised by the analyzer."""


class TimingLeakError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(TimingLeakError, ValueError):
    """A model or scheme parameter lies outside its domain."""


class TruncationError(TimingLeakError, ValueError):
    """An analysis domain drops too much probability mass."""


class ResolutionError(TimingLeakError, ValueError):
    """A bin is narrower than the fine grid it is built from."""


class BinRangeError(TimingLeakError, ValueError):
    """A timestamp falls outside the binning domain."""


class ShapeError(TimingLeakError, ValueError):
    """Conditional distributions are defined on different partitions."""


class AmbiguityError(TimingLeakError, ValueError):
    """A density has more than one mode, so its FWHM is ill-defined."""


class SizeError(TimingLeakError, ValueError):
    """Too few rows or events for the requested operation."""


class OrderingError(TimingLeakError, ValueError):
    """Timestamp input that must be sorted is not."""


class NoSignalError(TimingLeakError, ValueError):
    """A correlogram has no detectable peak."""


class SweepError(TimingLeakError):
    """A sweep row failed; the message names the row."""


class ConfigError(TimingLeakError, ValueError):
    """Invalid run configuration.

    Parameters
    ----------
    key : str
        Configuration key the problem was found under.
    message : str
        Human readable description.
    """

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")

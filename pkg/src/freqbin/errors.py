"""Exception types raised across the package."""


class FreqbinError(Exception):
    """Base class for all package errors."""


class InvalidGridError(FreqbinError, ValueError):
    pass


class OutOfRangeError(FreqbinError, ValueError):
    """A tabulated model or band-limited mapping was queried outside its range."""


class UndefinedStateError(FreqbinError, ValueError):
    """The amplitude is identically zero or otherwise not a physical state."""


class NotNormalizedError(FreqbinError, ValueError):
    pass


class EmptyReportError(FreqbinError, ValueError):
    """No spectral peaks were found above the detection threshold."""


class FringeError(FreqbinError, ValueError):
    """The HOM curve has no usable fringe or is undersampled."""


class ConfigError(FreqbinError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

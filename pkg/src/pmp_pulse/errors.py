class PMPError(Exception):
    """Base class for all package errors."""


class InvalidParameters(PMPError, ValueError):
    pass


class NoCrossing(PMPError):
    pass


class EnergyDrift(PMPError):
    pass


class NoRealSolution(PMPError):
    pass


class InconsistentInvariants(PMPError):
    pass


class InconsistentInitialData(PMPError):
    pass


class OptimizationFailed(PMPError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class Stalled(PMPError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DurationMismatch(PMPError, ValueError):
    pass


class RecordError(PMPError):
    """Malformed or incomplete extremal record; `path` locates the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path

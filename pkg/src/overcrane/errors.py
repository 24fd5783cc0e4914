"""Exception types raised across the package."""


class CraneError(Exception):
    """Base class for all package errors."""


class SingularMatrix(CraneError):
    pass


class NoConvergence(CraneError):
    pass


class NotSymmetric(CraneError):
    pass


class NonFiniteState(CraneError):
    pass


class StructureMismatch(CraneError):
    pass


class NotControllable(CraneError):
    pass


class IllConditioned(CraneError):
    pass


class NotHurwitz(CraneError):
    pass


class StepUnderflow(CraneError):
    pass


class IncompatibleScenarios(CraneError):
    pass


class ConfigError(CraneError):
    """Invalid configuration file; ``lineno`` points at the offending line when known."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)

"""Exception hierarchy shared by all regsynth modules."""


class RegsynthError(Exception):
    """Base class for every error raised by the package."""


class InvalidArgument(RegsynthError, ValueError):
    pass


class SingularMatrix(RegsynthError):
    pass


class NoConvergence(RegsynthError):
    pass


class NotHurwitz(RegsynthError):
    pass


class NotStabilizable(RegsynthError):
    pass


class NotDetectable(RegsynthError):
    pass


class NotObservable(RegsynthError):
    pass


class ParseError(RegsynthError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidMesh(RegsynthError):
    pass


class QuadratureFailure(RegsynthError):
    pass


class InsufficientData(RegsynthError):
    pass


class NonFinite(RegsynthError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class SpecMismatch(RegsynthError):
    pass


class ConfigError(RegsynthError):
    pass

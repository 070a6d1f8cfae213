"""Exception hierarchy shared by every fracsync module."""


class FracsyncError(Exception):
    """Base class for all library errors."""


class InvalidParameter(FracsyncError, ValueError):
    pass


class InvalidGrid(FracsyncError, ValueError):
    pass


class NonPositiveDefinite(FracsyncError, ArithmeticError):
    pass


class OutOfWindow(FracsyncError, ValueError):
    pass


class DegeneratePath(FracsyncError, ValueError):
    pass


class InsufficientSupport(FracsyncError, ValueError):
    pass


class RegularityViolation(FracsyncError, ValueError):
    pass


class GridMismatch(FracsyncError, ValueError):
    pass


class StepExplosion(FracsyncError, ArithmeticError):
    """Raised when an explicit scheme leaves the bounded regime (|x| > 1e12)."""


class ConfigError(FracsyncError, ValueError):
    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class ExperimentFailure(FracsyncError):
    pass

class HirotaLaxError(Exception):
    """Base class for every error raised by the library."""


class ConfigurationError(HirotaLaxError):
    """Invalid run or chain parameters. The CLI maps this to exit code 2."""


class GuardError(ConfigurationError):
    """Requested size exceeds the configured guard limits."""


class TruncationError(HirotaLaxError):
    pass


class MissingEntryError(HirotaLaxError):
    pass


class IndexClashError(HirotaLaxError, ValueError):
    pass


class FusionPoleError(HirotaLaxError):
    pass


class NotRepresentableError(HirotaLaxError):
    """A value cannot be represented exactly in the chosen coefficient model."""


class DiagonalizationError(HirotaLaxError):
    pass


class InterpolationError(HirotaLaxError):
    pass


class NoSolutionError(HirotaLaxError):
    pass


class DegenerateSolutionError(HirotaLaxError):
    def __init__(self, message: str, nullity: int):
        super().__init__(message)
        self.nullity = nullity


class SingularRootError(HirotaLaxError):
    pass


class SingularJacobianError(HirotaLaxError):
    pass


class ConvergenceError(HirotaLaxError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NotRealAnalyticError(HirotaLaxError, ValueError):
    """A Q-function with non-real coefficients was passed where Q = bar(Q) is required."""

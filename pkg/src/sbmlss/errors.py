"""Exception hierarchy shared across the package."""


class SbmLssError(Exception):
    """Base class for all errors raised by sbmlss."""


class ParameterError(SbmLssError, ValueError):
    """A model or test parameter is outside its admissible range."""


class DegenerateCenteringError(ParameterError):
    """Centering constant is 0 or 1, so the scaling denominator vanishes."""


class DomainError(ParameterError):
    """A function was evaluated outside its domain (e.g. t >= 1 for sigma(t))."""


class RegimeTooSparseError(ParameterError):
    """A growth condition on the average degree is violated."""


class ModeError(ParameterError):
    """A correction mode is incompatible with the requested cycle length."""


class ComplexityError(SbmLssError):
    """A brute-force computation would exceed its work guard."""


class NumericalError(SbmLssError, ArithmeticError):
    """A numerical routine failed (e.g. eigensolver non-convergence)."""


class ConfigError(SbmLssError):
    """Experiment configuration is invalid."""

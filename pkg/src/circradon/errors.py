"""Exception hierarchy.

The CLI maps ``ConfigError`` to exit code 1 and ``NumericsError`` to exit
code 2; ``OSError`` from file handling becomes exit code 3.
"""


class CircRadonError(Exception):
    pass


class ConfigError(CircRadonError, ValueError):
    """Invalid input or run configuration."""


class InvalidInputError(ConfigError):
    pass


class OnCurveError(ConfigError):
    pass


class NotMirrorableError(ConfigError):
    pass


class NotApplicableError(ConfigError):
    pass


class NumericsError(CircRadonError, ArithmeticError):
    """A computation cannot be carried out to the requested accuracy."""


class TangencyError(NumericsError):
    pass


class ResolutionError(NumericsError):
    pass


class TruncationError(NumericsError):
    pass


class DomainError(NumericsError):
    pass


class FitError(NumericsError):
    pass


class EllipticityError(NumericsError):
    pass


class SingularFrequencyError(NumericsError):
    pass

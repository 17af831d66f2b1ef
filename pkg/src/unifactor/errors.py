"""Exception and warning types raised by unifactor."""


class UnifactorError(Exception):
    """Base class for all library errors."""


class ValidationError(UnifactorError, ValueError):
    """Invalid input: shapes, parameter ranges, malformed files."""


class DimensionError(ValidationError):
    pass


class ParseError(ValidationError):
    """A CSV file could not be read as numbers; the message names the line."""


class AsymmetryError(ValidationError):
    pass


class DegenerateDataError(ValidationError):
    pass


class NegativeSpectrumError(ValidationError):
    pass


class RankDeficiencyError(ValidationError):
    pass


class NonOrthonormalBasisError(ValidationError):
    pass


class InfeasibleStartError(ValidationError):
    pass


class SingularModelError(UnifactorError, ArithmeticError):
    """A model covariance ``T + V`` is not positive definite."""


class ConvergenceError(UnifactorError, RuntimeError):
    """An iterative kernel ran out of its iteration budget."""


class DegenerateBasisError(UnifactorError, RuntimeError):
    """The q-th eigenvalue collapsed so the leading eigenspace is undefined."""


class RankCollapseWarning(RuntimeWarning):
    pass

"""Exception types raised across the package.

The CLI maps these onto exit codes: input/validation problems -> 2,
non-primitive chains where a unique stationary regime is required -> 3,
numerical failures -> 4.
"""


class QmcStatsError(Exception):
    """Base class for all package errors."""


class ValidationError(QmcStatsError):
    """Bad input data or parameters (CLI exit code 2)."""


class BadDimensions(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class NormalizationViolation(ValidationError):
    pass


class NotOnSimplex(ValidationError):
    pass


class WindowTooLong(ValidationError):
    pass


class ParseError(ValidationError):
    """Malformed model or sweep file; carries line/column when known."""

    def __init__(self, msg, line=None, column=None):
        super().__init__(msg)
        self.line = line
        self.column = column


class UnknownModel(ValidationError):
    pass


class ParamOutOfRange(ValidationError):
    pass


class SizeCapExceeded(ValidationError):
    pass


class NotPrimitive(QmcStatsError):
    """The chain has no unique full-rank stationary state with a spectral gap
    (CLI exit code 3).  Carries the spectrum report that led to the verdict."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class NumericalError(QmcStatsError):
    """Numerical failure (CLI exit code 4)."""


class EigenSolverFailure(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class DegeneratePerronEigenvalue(NumericalError):
    pass


class NumericalUnderflow(NumericalError):
    pass

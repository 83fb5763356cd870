"""Exception hierarchy for the semigroup inversion library.

Validation failures (bad inputs, malformed specs) and numerical failures
(overflow of exponential amplification, non-converged quadrature) are kept
in separate branches so the CLI can map them to distinct exit codes.
"""


class SemigroupInvError(Exception):
    """Base class for all library errors."""


class ValidationError(SemigroupInvError):
    """Input violates a documented precondition."""


class NumericalError(SemigroupInvError):
    """A computation cannot be carried out in double precision."""


# -- validation -------------------------------------------------------------

class NonPositiveWeight(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class NotMSymmetric(ValidationError):
    pass


class NegativeEigenvalue(ValidationError):
    """The generator is not negative semi-definite beyond tolerance."""


class NonFiniteFunctionValue(ValidationError):
    """A spectral function evaluated to nan/inf on the spectrum."""


class NegativeTime(ValidationError):
    pass


class NonPositiveAlpha(ValidationError):
    pass


class DegeneratePhi(ValidationError):
    """A regularising multiplier is not strictly positive on the spectrum."""


class InvalidBoundary(ValidationError):
    pass


class NonPositiveSigma(ValidationError):
    pass


class AsymmetricKernel(ValidationError):
    pass


class RowMassExceeded(ValidationError):
    pass


class InvalidConfig(ValidationError):
    """Malformed run configuration (CLI / JSON schema)."""


class ExpressionParseError(ValidationError):
    """Error in the restricted function-literal grammar.

    Carries the character position at which parsing failed.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# -- numerical --------------------------------------------------------------

class OverflowRisk(NumericalError):
    """A value exceeds double range; carries the base-10 exponent instead.

    ``log10_value`` estimates log10 of the quantity that could not be
    represented, so callers can report the magnitude without producing inf.
    """

    def __init__(self, message, log10_value=None):
        if log10_value is not None:
            message = f"{message} (log10 ~ {log10_value:.6g})"
        super().__init__(message)
        self.log10_value = log10_value


class QuadratureNotConverged(NumericalError):
    """Panel refinement was exhausted before the tolerance was met."""

    def __init__(self, message, error_estimate=None):
        if error_estimate is not None:
            message = f"{message} (error estimate {error_estimate:.3g})"
        super().__init__(message)
        self.error_estimate = error_estimate


class ConditioningCapExceeded(NumericalError):
    """The inversion integral would need amplification beyond the cap."""

    def __init__(self, message, exponent=None):
        if exponent is not None:
            message = f"{message} (growth exponent {exponent:.6g})"
        super().__init__(message)
        self.exponent = exponent

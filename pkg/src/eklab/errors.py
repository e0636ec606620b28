"""Exception hierarchy shared by every eklab module.

The CLI maps ``ValidationError`` (and subclasses) to exit code 2 and
``PrecisionError``/``BudgetError`` to exit code 3.
"""


class EklabError(Exception):
    """Base class for all eklab errors."""


class ValidationError(EklabError, ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    """A textual parameter could not be parsed."""

    def __init__(self, message, token=None):
        super().__init__(message)
        self.token = token


class RangeError(ValidationError):
    """An integer range is empty or reversed."""


class EmptyDomainError(ValidationError):
    """An operation was asked to work over an empty domain."""


class RankDeficiencyError(ValidationError):
    """Vectors that must be linearly independent are not."""


class DegenerateRelationsError(ValidationError):
    """The relation span forces the normalising coordinate to vanish."""


class TupleTypeError(ValidationError):
    """A prime tuple has the wrong type for the requested operation."""


class ResolutionError(ValidationError):
    """A sampled grid is too coarse for the requested quadrature."""


class PrecisionError(EklabError, ArithmeticError):
    """A certified computation ran out of precision."""

    def __init__(self, message, required_bits=None):
        super().__init__(message)
        self.required_bits = required_bits


class AmbiguousFloorError(PrecisionError):
    """An enclosure of alpha*n + beta still straddles an integer."""

    def __init__(self, message, integer=None):
        super().__init__(message)
        self.integer = integer


class ArcAmbiguityError(PrecisionError):
    """Two major-arc centres lie within tolerance of the same point."""


class TruncationError(PrecisionError):
    """A truncated series cannot meet its certified error budget."""


class BudgetError(EklabError):
    """An enumeration would exceed its configured work budget."""

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


class CapacityError(BudgetError):
    """A table would not fit the configured memory budget."""


class CounterexampleError(EklabError, AssertionError):
    """A verification loop found an input violating a proven identity."""

    def __init__(self, message, n=None):
        super().__init__(message)
        self.n = n

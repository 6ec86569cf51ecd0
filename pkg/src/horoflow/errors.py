"""Exception hierarchy shared by all horoflow modules."""


class HoroflowError(Exception):
    pass


class InvalidInputError(HoroflowError, ValueError):
    """Non-finite or otherwise malformed input to a flow or matrix operation."""


class DegenerateFactorizationError(HoroflowError, ValueError):
    """The Borel factorization left the chart (lambda_1 <= 0)."""


class CorruptedStateError(HoroflowError, ArithmeticError):
    """A matrix whose determinant is no longer positive."""


class ConstructionValidationError(HoroflowError, RuntimeError):
    pass


class IterationCapError(HoroflowError, RuntimeError):
    pass


class SolRangeError(HoroflowError, OverflowError):
    pass


class InvalidMatrixError(HoroflowError, ValueError):
    pass


class DomainError(HoroflowError, ValueError):
    pass


class RejectionEfficiencyError(HoroflowError, RuntimeError):
    pass


class ConfigError(HoroflowError, ValueError):
    pass

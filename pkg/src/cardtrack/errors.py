"""Exception hierarchy shared across the package."""


class CardtrackError(Exception):
    """Base class for all package errors."""


class DataError(CardtrackError, ValueError):
    """Input data violates a precondition (bad prices, duplicates, ...)."""


class ParseError(DataError):
    """Malformed CSV content."""


class InsufficientDataError(DataError):
    """Not enough periods for the requested computation."""


class ShapeError(CardtrackError, ValueError):
    """Array length or variable count mismatch."""


class InfeasibleSchemeError(CardtrackError, ValueError):
    """Resolution/cardinality combination cannot host a valid portfolio."""


class BoundTooTightError(InfeasibleSchemeError):
    """The max-holding cap is below floor(K / C)."""


class ProblemTooLargeError(CardtrackError, ValueError):
    """Exhaustive search requested for too many variables."""


class DomainError(CardtrackError, ValueError):
    """A period return at or below -100% inside a log-return metric."""


class UndefinedMetricError(CardtrackError, ValueError):
    """A relative metric has no valid denominator."""


class DegenerateRiskError(CardtrackError, ValueError):
    """Portfolio variance under a rolling covariance is not positive."""

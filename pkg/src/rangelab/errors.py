"""Exception types shared across the rangelab modules."""


class RangelabError(Exception):
    """Base class for all structured rangelab failures."""


class ContractViolation(RangelabError, ValueError):
    """An operation was called outside its documented precondition."""


class DimensionMismatch(ContractViolation):
    """Polynomial dimension and argument length disagree."""


class DegenerateCurveError(RangelabError):
    """The polynomial vanishes identically on the requested box."""


class SharedFactorError(RangelabError):
    """A resultant vanished identically, so the two polynomials share a factor."""


class SingularTangentError(RangelabError):
    """The implicit-function setup broke down (vertical tangent / zero gradient)."""


class EnumerationBudgetExceeded(RangelabError):
    """A combinatorial enumeration outgrew its configured budget."""


class PieceCapExceeded(RangelabError):
    """A single grid cell produced more refined sub-curves than the cap allows."""


class CoverageError(RangelabError):
    """No slab family at any level could cover a sub-curve within the slab budget.

    The offending sub-curve is attached as ``subcurve`` when available.
    """

    def __init__(self, message, subcurve=None):
        super().__init__(message)
        self.subcurve = subcurve


class DerivativeBoundError(RangelabError):
    """An implicit derivative of the query curve fell outside [-c, c]."""

    def __init__(self, message, subcurve=None, order=None, value=None):
        super().__init__(message)
        self.subcurve = subcurve
        self.order = order
        self.value = value


class ClassificationError(RangelabError):
    """A remaining-region representative point stayed ambiguous after retries."""


class EmptyGridError(RangelabError):
    """The packed-coefficient grid is empty in the requested parameter regime."""


class RootBracketError(RangelabError):
    """A root left the safety bracket, indicating a non-packed input."""

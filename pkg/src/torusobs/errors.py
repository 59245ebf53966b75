"""Exception hierarchy shared by all torusobs modules.

Everything user-facing derives from TorusObsError; ValidationError marks
bad inputs (CLI exit code 2), ComputeError marks runtime failures (exit 3).
"""


class TorusObsError(Exception):
    pass


class ValidationError(TorusObsError):
    pass


class ComputeError(TorusObsError):
    pass


class DimensionTooLarge(ValidationError):
    """n**d does not fit the flat cell index budget (d*log2(n) > 62)."""


class InvalidProbability(ValidationError):
    """A probability parameter fell outside [0, 1]."""


class GridMismatch(ValidationError):
    """Two objects built over different grids were combined."""


class GammaHGeodesic(ValidationError):
    """Geodesic lies entirely inside a grid hyperplane; excluded from traversal."""


class HorizonOutOfRange(ValidationError):
    """Traversal horizon must lie strictly inside (0, 1)."""


class NonpositiveHorizon(ValidationError):
    """Horizon reduction needs T > 0."""


class SkeletonTouch(ValidationError):
    """Traversal met the grid's codimension-2 skeleton; signature undefined."""


class DimensionUnsupported(ValidationError):
    """Operation is only available for specific dimensions."""


class DuplicatePoints(ValidationError):
    """Planar point set must be pairwise distinct."""


class TooManyPoints(ValidationError):
    """Brute-force separation enumeration is capped at 16 points."""


class TooManyVariables(ValidationError):
    """Exact tail enumeration is capped at 24 variables."""


class InvalidSpec(ValidationError):
    """Weighted-sum specification violates its constraints."""


class DegenerateFit(ComputeError):
    """Decay fit has too few usable (m, tail) points."""


class InvalidPolicy(ValidationError):
    """Candidate policy violates its constraints for the given grid/horizon."""

"""Exception hierarchy shared across the package.

Every error that callers are expected to catch programmatically has its
own class; message text is for humans and always names the offending
file, term, dyad, or coordinate.
"""


class ErgmPoolError(Exception):
    """Base class for all package-specific errors."""


class GraphFormatError(ErgmPoolError):
    """Malformed graph, covariate, or constraint file."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class DimensionMismatchError(ErgmPoolError):
    """Covariate or matrix dimensions inconsistent with the vertex count."""


class ConstraintViolationError(ErgmPoolError):
    """A graph contradicts the fixed dyads of its support constraint."""


class ConstrainedDyadError(ErgmPoolError):
    """Attempt to toggle a dyad fixed by the support constraint."""


class SizeMismatchError(ErgmPoolError):
    """Operation on graphs with different vertex counts."""


class MissingCovariateError(ErgmPoolError):
    """A model term references a covariate absent from the covariate set."""


class UnknownLevelError(ErgmPoolError):
    """A nodemix level pair references a level the covariate never takes."""


class DuplicateTermError(ErgmPoolError):
    """Two identical terms in one model (would make the information singular)."""


class EmptySetError(ErgmPoolError):
    """Operation requiring at least one graph received an empty set."""


class NoFreeDyadError(ErgmPoolError):
    """The support constraint fixes every dyad; nothing to sample."""


class InvalidProbabilityError(ErgmPoolError):
    """Edge probability outside [0, 1]."""


class InsufficientSampleError(ErgmPoolError):
    """Too few draws for the requested estimate (e.g. covariance needs > p rows)."""


class HullInfeasibleError(ErgmPoolError):
    """Target statistics lie on or outside the convex hull of achievable
    statistics, so no finite maximizer exists.

    Attributes:
        coordinates: names of the offending statistic coordinates.
        margins: per-coordinate hull margins at the last check.
    """

    def __init__(self, message, coordinates=(), margins=None):
        super().__init__(message)
        self.coordinates = tuple(coordinates)
        self.margins = margins


class NonIdentifiableModelError(ErgmPoolError):
    """A statistic is constant on the support; coefficients not identifiable."""


class EnumerationCapError(ErgmPoolError):
    """Free dyad count exceeds the exact-enumeration cap."""


class NotPositiveDefiniteError(ErgmPoolError):
    """A covariance that must be positive definite is not."""


class PriorModelMismatchError(ErgmPoolError):
    """Prior file fingerprint does not match the model it is applied to."""

"""Exception hierarchy shared by all errorfloor modules."""

from __future__ import annotations


class ErrorFloorError(Exception):
    """Base class for every error raised by this package."""


class InvalidGraph(ErrorFloorError, ValueError):
    """Adjacency lists violate a Tanner-graph invariant."""


class AlistError(ErrorFloorError, ValueError):
    """Base class for alist parse failures."""


class MalformedHeader(AlistError):
    pass


class DegreeMismatch(AlistError):
    pass


class IndexOutOfRange(AlistError):
    pass


class InconsistentAdjacency(AlistError):
    pass


class NonPrimeParameter(ErrorFloorError, ValueError):
    pass


class NonPositiveSNR(ErrorFloorError, ValueError):
    pass


class ShapeMismatch(ErrorFloorError, ValueError):
    pass


class DepthCapExceeded(ErrorFloorError, ValueError):
    pass


class DegenerateTie(ErrorFloorError):
    """A min-selection tie at the probed point makes the coefficients ambiguous."""


class ZeroCoefficients(ErrorFloorError, ValueError):
    pass


class NoFailureInRange(ErrorFloorError):
    """A search direction never produces a decoding failure up to the maximum radius."""


class NoFailureFound(ErrorFloorError):
    pass


class NotACodeword(ErrorFloorError, ValueError):
    pass


class InvalidManifest(ErrorFloorError, ValueError):
    pass


class TaskFailure(ErrorFloorError):
    pass


class EmptyStore(ErrorFloorError):
    pass

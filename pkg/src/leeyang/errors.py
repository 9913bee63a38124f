"""Exception types raised across the package."""


class LeeYangError(Exception):
    """Base class for all package errors."""


class NonConvergence(LeeYangError):
    """An iterative solver exhausted its iteration and retry budget."""


class BracketInvalid(LeeYangError):
    """Both ends of a bisection bracket give the same indicator value."""


class EmptyScan(LeeYangError):
    """A time scan found no minimum of the coherence amplitude below threshold."""


class AtZero(LeeYangError):
    """The modified partition function vanishes; log-derivatives are singular."""


class DegenerateZero(LeeYangError):
    """The requested Lee-Yang zero belongs to a multiplicity cluster."""


class SizeExceeded(LeeYangError):
    """Input is larger than a brute-force routine is allowed to handle."""


class StencilFailure(LeeYangError):
    """A finite-difference stencil point could not be evaluated."""

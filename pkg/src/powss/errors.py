"""Exception types raised by the planners, estimators and filters."""


class PowssError(Exception):
    """Base class for every error raised by this package."""


class ZeroTotalWeight(PowssError, ValueError):
    """A weighted particle set (or weight vector) sums to zero."""


class LengthMismatch(PowssError, ValueError):
    pass


class InvalidRegime(PowssError, ValueError):
    """The concentration bound is vacuous: t(lambda, N) <= 0."""


class ZeroLikelihood(PowssError, ValueError):
    """An observation has zero density under every successor state."""


class DomainError(PowssError, ValueError):
    pass


class IntractableSize(PowssError, RuntimeError):
    """Exhaustive enumeration would exceed the configured node budget."""

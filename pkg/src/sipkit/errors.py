"""Exception and warning types raised across sipkit."""


class SipkitError(Exception):
    """Base class for all sipkit errors."""


class ZeroMass(SipkitError, ValueError):
    pass


class EmptyRegion(SipkitError, ValueError):
    pass


class GridMismatch(SipkitError, ValueError):
    pass


class DegenerateEnvelope(SipkitError, ValueError):
    pass


class OutOfSupport(SipkitError, ValueError):
    def __init__(self, n_bad, msg=None):
        self.n_bad = int(n_bad)
        super().__init__(msg or f"{self.n_bad} samples outside the grid support")


class MaxDepthExceeded(SipkitError, ArithmeticError):
    """Adaptive quadrature hit its depth limit; ``value`` holds the partial estimate."""

    def __init__(self, value, msg=None):
        self.value = value
        self.converged = False
        super().__init__(msg or f"maximum subdivision depth reached (partial value {value!r})")


class SupportError(SipkitError, ValueError):
    pass


class DimensionMismatch(SipkitError, ValueError):
    pass


class DomainError(SipkitError, ValueError):
    pass


class DegenerateContour(SipkitError, ValueError):
    pass


class BandTooThin(SipkitError, ValueError):
    pass


class OutOfRange(SipkitError, ValueError):
    pass


class Infeasible(SipkitError, ValueError):
    pass


class MaxIterations(SipkitError, RuntimeError):
    pass


class NonpositiveDensity(SipkitError, ValueError):
    def __init__(self, index, msg=None):
        self.index = int(index)
        super().__init__(msg or f"nonpositive pushforward density at sample {self.index}")


class AllCellsFailed(SipkitError, RuntimeError):
    pass


class NonMonotoneMap(SipkitError, ValueError):
    pass


class SupportViolation(SipkitError, ValueError):
    pass


class NotPSD(SipkitError, ValueError):
    pass


class NonpositiveField(SipkitError, ValueError):
    pass


class RankDeficient(UserWarning):
    pass


class IllConditioned(UserWarning):
    pass

"""Exception types raised across the package."""


class FundsolError(Exception):
    """Base class; ``field`` names the offending input when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NonElliptic(FundsolError):
    pass


class ParseError(FundsolError):
    pass


class StencilOutOfDomain(FundsolError):
    pass


class ContourTooSmall(FundsolError):
    pass


class InvariantViolated(FundsolError):
    pass


class BadClassIndex(FundsolError):
    pass


class UnsupportedDimension(FundsolError):
    pass


class HalfSphereViolation(FundsolError):
    pass


class OutsideValidity(FundsolError):
    pass


class TooCloseToBoundary(FundsolError):
    pass


class MissingDerivative(FundsolError):
    pass


class NoConvergence(FundsolError):
    pass


class SupportExceedsValidity(FundsolError):
    pass


class UnknownName(FundsolError):
    pass


class AliasingRisk(UserWarning):
    pass

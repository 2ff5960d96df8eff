"""Exception types raised by the construction and verification routines."""


class GeometryError(ValueError):
    """Base class for every error raised by this package."""


class PointNotInDualCone(GeometryError):
    pass


class DistanceOutOfRange(GeometryError):
    pass


class ConeBudgetExceeded(GeometryError):
    pass


class WitnessNotFound(GeometryError):
    pass


class CoverVerificationFailed(GeometryError):
    def __init__(self, message, counterexample=None):
        super().__init__(message)
        self.counterexample = counterexample


class NoIntersectingHost(GeometryError):
    pass


class PunctureInsideBall(GeometryError):
    pass


class InfeasibleAperture(GeometryError):
    pass


class TagMismatch(GeometryError):
    pass

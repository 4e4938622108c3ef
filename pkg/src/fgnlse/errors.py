"""Exception hierarchy shared by all modules."""


class FiniteGapError(Exception):
    """Base class for all errors raised by this package."""


# curve
class DegenerateSpectrum(FiniteGapError):
    pass


class OverlappingCuts(FiniteGapError):
    pass


class AtBranchPoint(FiniteGapError):
    pass


class BasisConstructionFailed(FiniteGapError):
    pass


class QuadratureNotConverged(FiniteGapError):
    pass


class IllConditionedA(FiniteGapError):
    pass


class PathThroughBranchPoint(FiniteGapError):
    pass


class DivergentWithoutRegularization(FiniteGapError):
    pass


# theta
class InvalidRiemannMatrix(FiniteGapError):
    pass


class TruncationRadiusOverflow(FiniteGapError):
    pass


class ThetaZeroDivisor(FiniteGapError):
    pass


# fgs
class NonRealFrequency(FiniteGapError):
    pass


# nlse
class StepUnderflow(FiniteGapError):
    pass


class NonFiniteField(FiniteGapError):
    pass


# nft
class NoRootsFound(FiniteGapError):
    pass


class LengthMismatch(FiniteGapError):
    pass

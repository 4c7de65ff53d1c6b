"""Exception types raised across horoflow."""


class HoroflowError(Exception):
    """Base class for all library errors."""


class DomainError(HoroflowError, ValueError):
    """Argument outside the domain of a symmetric function."""


class GridMismatch(HoroflowError, ValueError):
    """Field or body defined on a different grid than expected."""


class NotHConvex(HoroflowError):
    """The A-matrix of a support body is not positive definite."""


class ValidationFailed(NotHConvex):
    """A converted or resampled body failed h-convexity validation."""


class NonStarShaped(HoroflowError):
    """A radial graph has nonpositive radius or leaves the curvature domain."""


class OutOfBracket(HoroflowError, ValueError):
    """Target value lies outside the radius bracket of a reference inverse."""


class FailedAfter30Halvings(HoroflowError):
    """Random body sampler could not reach the convexity margin."""


class FlowError(HoroflowError):
    """Failure during time integration; carries the flow time."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t:.17g})")
        self.t = t


class HConvexityLost(FlowError):
    """VMCF2 state left the strictly h-convex region."""


class DomainViolation(FlowError):
    """VMCF state left the domain of the speed function."""


class CFLViolation(FlowError):
    """Requested step exceeds the explicit stability bound."""

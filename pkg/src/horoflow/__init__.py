"""Numerical toolkit for constrained curvature flows of h-convex hypersurfaces in hyperbolic space."""

from .errors import (
    CFLViolation,
    DomainError,
    DomainViolation,
    FailedAfter30Halvings,
    FlowError,
    GridMismatch,
    HConvexityLost,
    HoroflowError,
    NonStarShaped,
    NotHConvex,
    OutOfBracket,
    ValidationFailed,
)
from .sphere import GridMode, SphereGrid
from .symfunc import SpeedFunction, SpeedKind
from .hconvex import RadialBody, SupportBody
from .quermass import FunctionalVector, functionals
from .flow import FlowConfig, FlowKind, FlowRecord, FlowResult, InitialSpec, run

__version__ = "0.1.0"

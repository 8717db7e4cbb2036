"""Exception types shared across the package.

Every failure mode that a caller can reasonably branch on gets its own
class; anything else is a plain ValueError from the offending call.
"""


class HopfMassError(Exception):
    """Base class for all package-specific errors."""


class ZeroPoint(HopfMassError):
    """An ambient point with |z| = 0 reached a chart operation."""


class OnAxis(HopfMassError):
    """A chart operation that divides by a coordinate hit that axis."""


class OutsideDomain(HopfMassError):
    """An evaluation point violates a constructor's domain restriction."""


class BadRadii(HopfMassError):
    """Shell or trace radii are degenerate or wrongly ordered."""


class InsufficientData(HopfMassError):
    """Too few samples or grid points for the requested estimate."""


class NotPositiveDefinite(HopfMassError):
    """A metric matrix expected to be positive definite is not."""


class TooCloseToOrigin(HopfMassError):
    """Mollification was requested nearer to the origin than its radius allows."""


class UnsupportedDimension(HopfMassError):
    """The operation is only implemented for a restricted set of dimensions."""


class ParseError(HopfMassError):
    """A function-spec string does not conform to the catalog grammar."""


class DimensionMismatch(HopfMassError):
    """A function spec and an evaluation point disagree about the dimension."""


class NotInvariant(HopfMassError):
    """A circle-invariant operation received a non-invariant function."""


class EvalFailure(HopfMassError):
    """A numeric evaluation produced NaN or infinity."""


class CheckFailed(HopfMassError):
    """A structural self-check or identity verification did not hold."""


class CounterexampleFound(CheckFailed):
    """An exact identity verifier found an explicit counterexample."""

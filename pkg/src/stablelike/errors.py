"""Exception types shared across the package."""


class StableLikeError(Exception):
    """Base class for all package errors."""


class BoundsViolated(StableLikeError):
    """A coefficient function escapes its declared [1/K0, K0] band."""


class OverlappingBumps(StableLikeError):
    """Bump supports intersect each other or the unit interval; the construction is invalid."""


class QuadratureFailure(StableLikeError):
    """An adaptive quadrature did not reach the requested tolerance."""


class AccuracyNotReached(StableLikeError):
    """A kernel evaluation missed its absolute-error target.

    Carries the achieved error estimate in ``achieved``.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class DivergentIntensity(StableLikeError):
    """The perturbing density touches the origin, so the jump intensity diverges."""


class GridOverflow(StableLikeError):
    """A requested convolution support exceeds the configured maximum."""


class TruncationInsufficient(StableLikeError):
    """The Poisson series truncation order cannot meet the tail-mass requirement."""


class NonPositiveDelta(StableLikeError):
    """The base-kernel gradient is not positive on the chosen interval."""


class TailBoundNotObserved(StableLikeError):
    """No probed tail radius satisfies the power-law gradient bound."""


class TailDominates(StableLikeError):
    """The discarded-cascade-tail allowance exceeds the measured positive margin."""

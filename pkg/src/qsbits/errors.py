"""Exception types shared across the package."""


class DepthCapExceeded(RuntimeError):
    """Two keys agreed on every bit up to the depth cap."""

    def __init__(self, depth_cap):
        super().__init__(f"keys agree on all bits through depth cap {depth_cap}")
        self.depth_cap = depth_cap


class QuadratureFailure(RuntimeError):
    """Numerical integration could not meet its error tolerance."""


class ZeroMassInterval(ValueError):
    """A density sampler tried to condition on an interval of zero mass."""


class PoleArgument(ValueError):
    """Gamma-type function evaluated at a nonpositive integer."""


class ExperimentFailed(RuntimeError):
    """A simulation broke one of its own consistency rules (e.g. too many aborted trials)."""

"""Exception types shared across modules."""


class WindowError(ValueError):
    """The threshold lies outside the interval where both MD and FA are below 1/2."""


class PoleError(ValueError):
    """exp(theta - gamma) is too close to 1 for the series coefficients."""


class OracleRangeError(ValueError):
    """Block-length beyond the range where the Poisson-mixture oracle is trusted."""


class TwoTermBreakdown(ValueError):
    """g1/n >= 1, so the two-term closed form has a non-positive log argument."""

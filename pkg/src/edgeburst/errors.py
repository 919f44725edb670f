"""Exception types shared across the package."""


class EdgeBurstError(Exception):
    """Base class for all package-specific failures."""


class NonConvergenceError(EdgeBurstError):
    """The survival probability never reached the requested threshold."""

    def __init__(self, message, horizon=None, survival=None):
        super().__init__(message)
        self.horizon = horizon
        self.survival = survival


class ExceptionalPointError(EdgeBurstError):
    """The operator is defective (or numerically indistinguishable from
    defective); mode-based operations are unavailable."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class CoefficientOverflowError(EdgeBurstError):
    """Series coefficients left the representable range."""

    def __init__(self, message, largest_safe_order=None):
        super().__init__(message)
        self.largest_safe_order = largest_safe_order

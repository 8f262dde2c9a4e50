"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class UndefinedRatioError(ArithmeticError):
    """Raised when a ratio has a vanishing denominator."""


class BlowUpError(RuntimeError):
    """Raised when the solver produces non-finite coefficients.

    Carries the last time at which the state was finite, the diagnostics
    collected so far and the last finite state, so callers can still write
    partial output.
    """

    def __init__(self, last_time, records=None, state=None):
        super().__init__(f"non-finite field encountered after t={last_time:g}")
        self.last_time = last_time
        self.records = list(records or [])
        self.state = state

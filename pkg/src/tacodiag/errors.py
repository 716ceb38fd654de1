"""Exception types shared across the toolkit."""


class CodiagError(Exception):
    """Base class for all toolkit errors."""


class BudgetExceeded(CodiagError):
    """A search exceeded its node or wall-clock budget. Never a verdict."""

    def __init__(self, what, limit):
        super().__init__(f"{what} budget of {limit} exceeded")
        self.what = what
        self.limit = limit


class StateBudgetExceeded(BudgetExceeded):
    pass


class ResourceTooLarge(BudgetExceeded):
    pass


class InvariantViolation(CodiagError):
    """A delay would leave the location invariant.

    ``max_delay`` is the supremum of admissible delays.
    """

    def __init__(self, max_delay):
        super().__init__(f"invariant violated; admissible delay <= {max_delay}")
        self.max_delay = max_delay


class AlphabetClash(CodiagError):
    pass


class InconsistentObservation(CodiagError):
    pass


class NotCodiagnosable(CodiagError):
    pass


class ModelSyntaxError(CodiagError):
    def __init__(self, message, line, column=1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column

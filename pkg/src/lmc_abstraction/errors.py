"""Exception and warning types raised across the package."""


class ModelError(ValueError):
    """Base class for malformed chains, partitions and abstractions."""


class MalformedModel(ModelError):
    pass


class NonStochasticRow(ModelError):
    def __init__(self, row, total):
        self.row = row
        self.total = total
        super().__init__(f"row {row} sums to {total!r}, expected 1")


class NegativeEntry(ModelError):
    def __init__(self, row, col, value):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"entry ({row}, {col}) is negative: {value!r}")


class UnknownState(ModelError):
    def __init__(self, state):
        self.state = state
        super().__init__(f"unknown state {state!r}")


class MissingLabel(ModelError):
    def __init__(self, state):
        self.state = state
        super().__init__(f"state {state!r} has no label")


class InvalidPath(ModelError):
    pass


class LengthMismatch(ModelError):
    pass


class BlockOutOfRange(ModelError, IndexError):
    pass


class InvalidRepresentative(ModelError):
    pass


class EmptyInterval(ValueError):
    """The interval row contains no stochastic vector."""


class DimensionMismatch(ValueError):
    pass


class NotApplicable(ValueError):
    """A construction step was requested outside its precondition."""


class NonConvergence(RuntimeError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no fixpoint after {iterations} iterations (residual {residual:.3e})"
        )


class PctlSyntaxError(ValueError):
    def __init__(self, column, expected, text=""):
        self.column = column
        self.expected = expected
        self.text = text
        super().__init__(f"column {column}: expected {expected}")


class ThresholdOutOfRange(ValueError):
    pass


class VacuousBoundWarning(UserWarning):
    """The propagated error reached 1, so the abstract verdict carries no information."""


class IndexOutOfRange(ValueError, IndexError):
    pass

"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside the domain an operation accepts."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or produced unusable output."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class MemoryBudgetError(RuntimeError):
    """A dense materialization would exceed the configured memory budget."""


class EqualizationError(RuntimeError):
    """The equalizer matrix could not be inverted for this trial."""

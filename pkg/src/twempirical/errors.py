"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data or arguments violate a documented precondition."""


class DegenerateProblemError(ValueError):
    """The double Wishart problem has no usable restricted subspace."""


class DegenerateNullError(DegenerateProblemError):
    """Too many permutation roots sit on the [0, 1] boundary to fit a null."""


class FitError(RuntimeError):
    """An optimizer-based fit did not converge.

    ``fallback`` carries the method-of-moments fit of the same sample.
    """

    def __init__(self, message, fallback=None):
        super().__init__(message)
        self.fallback = fallback

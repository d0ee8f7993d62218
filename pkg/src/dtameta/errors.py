"""Exception types shared across the package."""


class DtametaError(Exception):
    """Base class for all package-specific errors."""


class ParseError(DtametaError):
    """Malformed input file or configuration."""


class NumericFailureError(DtametaError):
    """A numerical routine produced a non-finite value."""

    def __init__(self, message, study_index=None):
        super().__init__(message)
        self.study_index = study_index


class ConvergenceFailureError(DtametaError):
    """Optimizer exhausted its iteration budget.

    Carries the best point seen and the gradient norm there so callers
    can inspect or restart.
    """

    def __init__(self, message, best_point=None, gradient_norm=None):
        super().__init__(message)
        self.best_point = best_point
        self.gradient_norm = gradient_norm


class ConstraintInfeasibleError(DtametaError):
    """No gamma0 satisfies the marginal-probability constraint.

    ``achievable`` is the (low, high) range of attainable marginal
    selection probabilities.
    """

    def __init__(self, message, achievable=None):
        super().__init__(message)
        self.achievable = achievable


class SingularInformationError(DtametaError):
    """Observed information matrix is numerically singular."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class SizeCapError(DtametaError):
    """Exact double summation would exceed the configured term cap."""

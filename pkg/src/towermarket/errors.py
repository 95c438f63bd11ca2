"""Exception types raised by the market model and its solvers."""


class ModelError(ValueError):
    """Base class for invalid inputs or unusable model states."""


class UndefinedRatioError(ModelError):
    """A ratio was requested against a zero baseline revenue."""


class DegenerateBaselineError(ModelError):
    """The baseline market leaves an operator that must be analysed with no revenue."""


class InfeasibleError(ModelError):
    """No candidate satisfies the problem constraints."""


class NoEligibleEquilibriumError(ModelError):
    """The grid game has no action tuple giving every operator positive revenue."""


class SizeGuardError(ModelError):
    """An exhaustive enumeration was requested on an instance that is too large."""

"""
Exception hierarchy for shrinkbench.

Every error carries the process exit code the CLI should use:
2 for bad configuration / input, 3 for numerical failures.
"""


class ShrinkBenchError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


# ------------------------------------------------------------------ #
#  Configuration errors (exit 2)                                        #
# ------------------------------------------------------------------ #

class ConfigError(ShrinkBenchError):
    exit_code = 2


class DomainError(ConfigError):
    """An argument lies outside the domain of the operation."""


class DimensionMismatch(ConfigError):
    pass


class InconsistentConfig(ConfigError):
    pass


class RequiresP3(ConfigError):
    """Stein-family estimators and risks need p >= 3."""

    def __init__(self, p: int):
        super().__init__(f"Stein-type shrinkage requires p >= 3, got p={p}")
        self.p = p

    def __reduce__(self):
        return type(self), (self.p,)


class FoldTooSmall(ConfigError):
    pass


class MalformedTable(ConfigError):
    pass


# ------------------------------------------------------------------ #
#  Numerical errors (exit 3)                                            #
# ------------------------------------------------------------------ #

class NumericalError(ShrinkBenchError):
    exit_code = 3


class NotPositiveDefinite(NumericalError):
    pass


class SeriesNotConverged(NumericalError):
    pass


class MomentUndefined(NumericalError):
    pass


class DegenerateResidual(NumericalError):
    pass


class DegenerateStatistic(NumericalError):
    pass


class ConstantColumn(NumericalError):
    pass


class MaxSweepsExceeded(NumericalError):
    def __init__(self, sweeps: int, max_change: float):
        super().__init__(
            f"coordinate descent stopped after {sweeps} sweeps "
            f"(last max coefficient change {max_change:.3e})"
        )
        self.sweeps = sweeps
        self.max_change = max_change

    def __reduce__(self):
        return type(self), (self.sweeps, self.max_change)


class CellFailure(NumericalError):
    """An estimator failed inside a simulation cell."""

    def __init__(self, delta2: float, rep: int, estimator: str, cause: Exception):
        super().__init__(
            f"cell delta2={delta2:g} failed at replication {rep} "
            f"({estimator}): {cause}"
        )
        self.delta2 = delta2
        self.rep = rep
        self.estimator = estimator
        self.cause = cause
        # configuration problems keep their own exit code
        self.exit_code = getattr(cause, "exit_code", NumericalError.exit_code)

    # failures cross process boundaries when cells run in a worker pool
    def __reduce__(self):
        return type(self), (self.delta2, self.rep, self.estimator, self.cause)

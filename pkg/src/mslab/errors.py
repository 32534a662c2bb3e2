"""Exception taxonomy shared across the package.

Every in-band failure mode gets its own class so callers (and the CLI exit
code logic) can react without string matching.
"""


class MsLabError(Exception):
    """Base class for all package-specific errors."""


class InvalidDimension(MsLabError):
    pass


class InvalidParabolic(MsLabError):
    pass


class DimensionMismatch(MsLabError):
    pass


class CombinatorialBlowup(MsLabError):
    pass


class PoleSignal(MsLabError):
    """Evaluation requested exactly at a pole."""


class OutOfStrip(MsLabError):
    pass


class WindowTooWide(MsLabError):
    pass


class AsymptoticUnreliable(MsLabError):
    pass


class SingularConfiguration(MsLabError):
    pass


class SingularTerm(MsLabError):
    """A Weyl-sum summand with an unresolvable pole in the perturbation.

    Carries the offending factor list for diagnosis.
    """

    def __init__(self, message, factors=()):
        super().__init__(message)
        self.factors = list(factors)


class IdenticallyZeroDenominator(MsLabError):
    """A denominator factor vanishing in both s and the perturbation.

    Never regularized silently; this indicates a convention bug upstream.
    """


class DivergingLimit(MsLabError):
    pass


class PerturbationFailure(MsLabError):
    pass


class ContourCollision(MsLabError):
    pass


class QuadratureFailure(MsLabError):
    def __init__(self, message, worst_panel=None):
        super().__init__(message)
        self.worst_panel = worst_panel


class PipelineInconsistency(MsLabError):
    pass


class ScheduleViolation(MsLabError):
    pass


class ConditionUnsatisfied(MsLabError):
    pass


class BudgetError(MsLabError):
    def __init__(self, message, suggested_p=None):
        super().__init__(message)
        self.suggested_p = suggested_p


class RankError(MsLabError):
    pass


class McUnreliable(MsLabError):
    pass


class ImpossibilityViolation(MsLabError):
    pass


class LemmaViolation(MsLabError):
    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table


class CancellationFailure(MsLabError):
    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table

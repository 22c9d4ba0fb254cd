"""Exception types shared across the toolkit."""


class SpecError(ValueError):
    """A mission specification failed to parse or validate.

    Carries the list of violation records that caused the failure.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class NoPlanExists(RuntimeError):
    """The planning problem has no solution (goal unreachable)."""


class PlanTimeout(RuntimeError):
    """Planner exceeded its configured wall-clock budget."""


class ModelError(ValueError):
    """A probabilistic model is malformed (non-stochastic rows, bad labels...)."""


class InfiniteRewardError(ArithmeticError):
    """Expected reward query on a target that is not reached almost surely."""


class StateBudgetExceeded(RuntimeError):
    """Explicit-state model construction hit the state budget.

    The count reached is itself a result (it documents blow-up), so it is
    carried on the exception.
    """

    def __init__(self, message, states_reached=0):
        super().__init__(message)
        self.states_reached = states_reached


class LimitExceeded(RuntimeError):
    """An enumeration (genotype space, policy space) exceeded its limit."""


class ScenarioError(ValueError):
    """A runtime scenario file violates its contract (ordering, rates)."""


class UnrecoverableMission(RuntimeError):
    """Adaptation escalated to a full replan and no plan exists."""

"""Hybrid task planning for mixed human/robot missions.

Pipeline: parse a JSON mission (spec), search for a feasible
minimum-travel plan (planner), augment it with retry/uncertainty data into
per-agent Markov chains (chains), verify instantiated models exactly (pmc),
synthesise Pareto-optimal attempt budgets (synthesis), and adapt a deployed
plan at runtime against task failures and requirement changes (adaptation).
A direct whole-problem MDP baseline (baseline) provides the optimality
yardstick.
"""

__version__ = "0.1.0"

from .spec import ProblemSpec, parse_problem_spec, validate, serialize  # noqa: F401
from .planner import Plan, PlannerConfig, plan_mission, validate_plan, plan_metrics  # noqa: F401
from .chains import ParametricPlanModel, build_parametric_model, instantiate  # noqa: F401
from .synthesis import GaConfig, ParetoArchive, synthesize, exhaustive_synthesize, evaluate  # noqa: F401

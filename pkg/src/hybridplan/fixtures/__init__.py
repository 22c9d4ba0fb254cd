"""Bundled mission fixtures.

vineyard  - the 3x3 field mission: nine locations with four-neighbour
            adjacency (reconstructed from the documented move set; the
            layout drawing is only graphical), four agents, ten tasks.
m1        - small baseline instance: 3x4 grid, one worker + one robot,
            three tasks, retry cap 1 (a single budget vector).
m1_mini   - two-location reduction of m1 with the same task structure,
            small enough for exhaustive policy enumeration.
m2        - nine-budget-vector instance: one robot, two retryable tasks
            with cap 3; under the 0.95 success floor exactly four vectors
            are feasible and mutually nondominated.

scenario_adaptation - scripted runtime scenario on the vineyard mission
            driving one adaptation of every grade: an absorbed failure, a
            budget swap, a relaxed success floor, a probability drought on a
            late task, and a threshold change forcing a full replan.
"""

from __future__ import annotations

import importlib.resources

from ..spec import ProblemSpec, parse_problem_spec

FIXTURES = ("vineyard", "m1", "m1_mini", "m2")
SCENARIOS = ("scenario_adaptation",)


def fixture_text(name: str) -> str:
    if name not in FIXTURES and name not in SCENARIOS:
        raise KeyError(f"unknown fixture '{name}' (have {FIXTURES + SCENARIOS})")
    ref = importlib.resources.files("hybridplan.fixtures").joinpath(f"{name}.json")
    return ref.read_text()


def load_fixture(name: str) -> ProblemSpec:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture '{name}' (have {FIXTURES})")
    return parse_problem_spec(fixture_text(name))

import pytest

from hybridplan.chains import build_parametric_model
from hybridplan.fixtures import load_fixture
from hybridplan.planner import PlannerConfig, plan_mission


@pytest.fixture(scope="session")
def vineyard():
    return load_fixture("vineyard")


@pytest.fixture(scope="session")
def vineyard_plan(vineyard):
    return plan_mission(vineyard, PlannerConfig(strategy="astar", timeout=60))


@pytest.fixture(scope="session")
def vineyard_model(vineyard, vineyard_plan):
    return build_parametric_model(vineyard, vineyard_plan)


@pytest.fixture(scope="session")
def m1():
    return load_fixture("m1")


@pytest.fixture(scope="session")
def m1_mini():
    return load_fixture("m1_mini")


@pytest.fixture(scope="session")
def m2():
    return load_fixture("m2")


@pytest.fixture(scope="session")
def m2_model(m2):
    plan = plan_mission(m2, PlannerConfig())
    return build_parametric_model(m2, plan)

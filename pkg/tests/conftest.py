import pytest

from core.case_study import case_study_plan
from core.competences import baseline_geometry, mission_from_tree
from core.datamodel import load_tree
from core.disciplines import calibrate_baseline, load_constants
from utils.constants import BASELINE_MTOW, DEFAULT_BASELINE_FILE, DEFAULT_CONSTANTS_FILE


@pytest.fixture(scope="session")
def constants():
    return load_constants(DEFAULT_CONSTANTS_FILE)


@pytest.fixture(scope="session")
def baseline():
    return load_tree(DEFAULT_BASELINE_FILE)


@pytest.fixture(scope="session")
def mission(baseline, constants):
    return mission_from_tree(baseline, constants)


@pytest.fixture(scope="session")
def geometry(baseline):
    return baseline_geometry(baseline)


@pytest.fixture(scope="session")
def calibrated(mission, geometry, constants):
    return calibrate_baseline(mission, geometry, BASELINE_MTOW, constants)


@pytest.fixture(scope="session")
def case_plan():
    """(plan, architected graph) of the shipped competences."""
    return case_study_plan()

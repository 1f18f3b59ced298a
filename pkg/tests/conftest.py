import os

import pytest
from hypothesis import HealthCheck, settings

from htnground.generators import data_text, load_bundled
from htnground.grounding import ground

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def basic():
    return load_bundled("rover-domain.pddl", "rover-basic.pddl")


@pytest.fixture(scope="session")
def basic_gp(basic):
    return ground(basic)


@pytest.fixture(scope="session")
def rover_domain_text():
    return data_text("rover-domain.pddl")


@pytest.fixture
def data_dir():
    from htnground.generators import data_path
    return data_path("rover-domain.pddl").parent


_criteria: dict = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    n = int(name.split("_")[2])
    if report.failed or (report.when == "call" and not report.skipped):
        if _criteria.get(n) != "FAIL":
            _criteria[n] = "FAIL" if report.failed else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        terminalreporter.write_line(f"criterion {n:2d}: {_criteria[n]}")

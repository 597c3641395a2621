import pytest
from hypothesis import settings

from d2dmimo.experiments import preset_params

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")

# filled by test_acceptance; echoed in the terminal summary so it survives output capture
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def fig2():
    return preset_params("fig2")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

import pytest
from hypothesis import HealthCheck, settings

from fgnlse import acceptance as ac
from fgnlse import observables as ob

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion lines collected by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def paper():
    """(ThetaParameters, DimensionalSolution) of the genus-2 reference spectrum."""
    return ob.paper_solution()


@pytest.fixture(scope="session")
def criterion(paper):
    """Lazily evaluated acceptance criteria, each computed once per session."""
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = ac.run(n, *paper)
            ACCEPTANCE_LINES[n] = cache[n].line()
        return cache[n]

    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

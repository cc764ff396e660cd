import pytest
from hypothesis import HealthCheck, settings

from starkprufer.special import ModelParams, ReferenceSolution

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def rs_free():
    return ReferenceSolution(ModelParams(1.0, 0.0, 0.0))


@pytest.fixture(scope="session")
def rs_unit():
    """F = 1, E = 0, lam = 1."""
    return ReferenceSolution(ModelParams(1.0, 0.0, 1.0))


@pytest.fixture(scope="session")
def rs_rational():
    return ReferenceSolution(ModelParams.from_rational(1, 1, 1.0, 1.0))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

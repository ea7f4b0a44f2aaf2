import os

import pytest
from hypothesis import HealthCheck, settings

from holowdm.scenario import Scenario

settings.register_profile("ci", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", max_examples=10, deadline=None)
settings.register_profile("thorough", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture(scope="session")
def base():
    """Ls = 0.2 m, Lr = 1 m, d = 5 m, lambda = 1 cm, all 41 modes."""
    return Scenario()


@pytest.fixture(scope="session")
def small():
    """A cheap 11-mode link used where the full mode set is not needed."""
    return Scenario(N=11)


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the acceptance summary and assert on it."""
    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
        _VERDICTS.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

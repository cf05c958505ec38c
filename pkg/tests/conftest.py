import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bearing_pose import reference_scenario, run

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance verdicts, printed once at the end of the session
VERDICTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def ref():
    return reference_scenario()


@pytest.fixture(scope="session")
def ref_run(ref):
    return run(ref)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
        ok, detail = VERDICTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True
)
settings.load_profile("default")

ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""

    def record(criterion, passed, detail=""):
        ACCEPTANCE[criterion] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE, key=lambda c: (int(str(c).split()[0]), str(c))):
        passed, detail = ACCEPTANCE[criterion]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {criterion}: {detail}")

import pytest
from hypothesis import HealthCheck, settings

from rahecke.coxeter import CoxeterSystem
from rahecke.hyperbolic import build_polygon

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def pentagon():
    return CoxeterSystem.polygon_group(5)


@pytest.fixture(scope="session")
def model(pentagon):
    return build_polygon(5, pentagon)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        name, passed, note = results[n]
        terminalreporter.write_line(f"criterion {n:>2} {'PASS' if passed else 'FAIL'} {name} {note}".rstrip())

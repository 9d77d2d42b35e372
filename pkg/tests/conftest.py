import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (title, list of (test id, passed))
_criteria: dict[int, tuple[str, list]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, (title, []))
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry[1].append((item.nodeid, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, results = _criteria[number]
        ok = bool(results) and all(passed for _, passed in results)
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title} "
            f"({sum(p for _, p in results)}/{len(results)} checks)")


@pytest.fixture(scope="session")
def synthetic50():
    from qsegeval.synthetic import make_collection
    return make_collection(n_queries=50, n_docs=300, seed=3)


@pytest.fixture(scope="session")
def engine50(synthetic50):
    from qsegeval.engine import LocalEngine, build_index
    return LocalEngine(build_index(synthetic50.pool))

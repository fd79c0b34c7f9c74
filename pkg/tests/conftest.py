import pytest

from maskshards.bilinear import ToyGroup, production_group

_criteria: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def toy():
    return ToyGroup(101)


@pytest.fixture(scope="session")
def bls():
    return production_group()


@pytest.fixture(params=["toy", "bls12-381"], scope="session")
def group(request):
    return ToyGroup(101) if request.param == "toy" else production_group()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, title = marker.args
    status = "PASS" if report.passed else "FAIL"
    previous = _criteria.get(number)
    if previous is None or previous[1] == "PASS":
        _criteria[number] = (title, status)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status = _criteria[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")

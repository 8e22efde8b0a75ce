import numpy as np
import pytest

# acceptance criteria: number -> (description, [outcomes])
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by a test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            number, text = mark.args
            _CRITERIA.setdefault(number, [text, {}])[1][item.nodeid] = None


def pytest_runtest_logreport(report):
    for _, outcomes in _CRITERIA.values():
        if report.nodeid in outcomes and (report.when == "call" or report.failed or report.skipped):
            if outcomes[report.nodeid] in (None, "passed"):
                outcomes[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, outcomes = _CRITERIA[number]
        ran = [o for o in outcomes.values() if o is not None]
        if not ran:
            continue
        status = "PASS" if all(o == "passed" for o in ran) and len(ran) == len(outcomes) else "FAIL"
        failed = [n.split("::")[-1] for n, o in outcomes.items() if o not in ("passed", None)]
        line = f"criterion {number}: {status}  {text}"
        if failed:
            line += f"  [failing: {', '.join(failed)}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

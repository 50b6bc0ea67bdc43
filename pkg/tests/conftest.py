import pytest

from cyclewalk.acceptance import CRITERIA

_results = {}


def record_criterion(result):
    _results[result.number] = result


@pytest.fixture
def criterion_log():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number, *_ in CRITERIA:
        if number in _results:
            terminalreporter.write_line(_results[number].line())

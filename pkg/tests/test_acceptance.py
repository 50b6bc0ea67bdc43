"""Acceptance criteria 1-12; one PASS/FAIL line per criterion is printed at
the end of the session (and when run as a script)."""

import pytest

from cyclewalk.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"{c[0]:02d}-{c[1].replace(' ', '-')}" for c in CRITERIA])
def test_criterion(number, criterion_log):
    result = run_criterion(number)
    criterion_log(result)
    print(result.line())
    assert result.passed, result.line()


if __name__ == "__main__":
    import sys

    failed = 0
    for number, *_ in CRITERIA:
        res = run_criterion(number)
        print(res.line(), flush=True)
        failed += not res.passed
    sys.exit(1 if failed else 0)

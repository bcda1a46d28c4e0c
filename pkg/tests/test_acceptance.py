"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest
(``pytest tests/test_acceptance.py -s`` shows the lines inline; they are also
echoed in the terminal summary).
"""

import json

import pytest

from heatlab.acceptance import CHECKS, run_check

LINES = []


@pytest.fixture(scope="module", autouse=True)
def _report(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None and LINES:
        reporter.write_sep("-", "acceptance criteria")
        for line in LINES:
            reporter.write_line(line)


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number):
    result = run_check(number)
    line = f"{result.line()}  [{result.seconds:.1f}s]"
    LINES.append(line)
    print(line)
    assert result.passed, json.dumps(result.to_dict()["details"], indent=1, sort_keys=True)[:4000]


if __name__ == "__main__":
    import sys

    failed = 0
    for number in sorted(CHECKS):
        result = run_check(number)
        print(f"{result.line()}  [{result.seconds:.1f}s]", flush=True)
        failed += not result.passed
    sys.exit(1 if failed else 0)

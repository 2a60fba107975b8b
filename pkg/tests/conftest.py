import re

import pytest

from srl_forge.frame_db import bundled_db
from srl_forge.prompting import TemplateSet


@pytest.fixture(scope="session")
def db():
    return bundled_db()


@pytest.fixture(scope="session")
def zh_db():
    return bundled_db("zh")


@pytest.fixture(scope="session")
def tpl():
    return TemplateSet.default("en")


@pytest.fixture(scope="session")
def zh_tpl():
    return TemplateSet.default("zh")


# one pass/fail line per acceptance criterion at the end of the run

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_results: dict = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.outcome != "passed":
        previous = _results.get(key, "PASS")
        if report.skipped:
            outcome = "SKIP"
        elif report.failed:
            outcome = "FAIL"
        else:
            outcome = "PASS"
        _results[key] = "FAIL" if "FAIL" in (previous, outcome) else outcome


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), outcome in sorted(_results.items()):
        terminalreporter.write_line(f"criterion {n:2d} {name:<32} {outcome}")

import json
from pathlib import Path

import pytest

from smokebench.fixtures import default_scenario, generate

DATA = Path(__file__).parent / "data"

_acceptance = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _markers.get(report.nodeid)
    if marker is None:
        return
    number, title = marker
    ok = report.outcome == "passed"
    prev = _acceptance.get(number)
    _acceptance[number] = (title, ok and (prev is None or prev[1]), report.duration)


_markers = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            _markers[item.nodeid] = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok, duration = _acceptance[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title} ({duration:.2f}s)")


@pytest.fixture(scope="session")
def season_tables():
    return json.loads((DATA / "season2023_tables.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def seed1_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("seed1")
    generate(default_scenario(1), out)
    return out

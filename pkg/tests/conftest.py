import json
from pathlib import Path

import pytest

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    """Collect acceptance-gate outcomes for the end-of-run summary."""
    if "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        if report.when == "call" or (report.when == "setup" and report.failed):
            _acceptance_outcomes[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name in sorted(_acceptance_outcomes):
        verdict = "PASS" if _acceptance_outcomes[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"  {verdict}  {name}")

from ducg import (
    DiagnosisSession,
    ingest_tick,
    iter_reading_groups,
    parse_kb,
)

DATA = Path(__file__).parent / "data"


def run_scenario(kb, csv_path, **ingest_kwargs):
    """Replay a signal file through a fresh session; return triggered reports."""
    session = DiagnosisSession(kb)
    reports = []
    prev = None
    lines = Path(csv_path).read_text().splitlines()
    for _tick, readings in iter_reading_groups(lines):
        snapshot, triggered = ingest_tick(prev, readings, kb, **ingest_kwargs)
        prev = snapshot
        if triggered and snapshot.abnormal_set:
            reports.append(session.diagnose_tick(snapshot))
    return reports, session


@pytest.fixture(scope="session")
def tworoot_text():
    return (DATA / "tworoot_kb.json").read_text()


@pytest.fixture()
def tworoot_kb(tworoot_text):
    return parse_kb(tworoot_text)


@pytest.fixture()
def tworoot_signals():
    return DATA / "tworoot_signals.csv"


@pytest.fixture()
def tworoot_reports(tworoot_kb, tworoot_signals):
    reports, _session = run_scenario(tworoot_kb, tworoot_signals)
    return reports


@pytest.fixture(scope="session")
def plant_text():
    return (DATA / "plant24_kb.json").read_text()


@pytest.fixture()
def plant_kb(plant_text):
    return parse_kb(plant_text)


@pytest.fixture()
def plant_signals():
    return DATA / "plant24_signals.csv"


@pytest.fixture(scope="session")
def report_schema():
    return json.loads((DATA / "report_schema.json").read_text())

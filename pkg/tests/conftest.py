import csv
from datetime import date, timedelta
from pathlib import Path

import pytest

from styleswitch import agents, config, engine, synthetic
from styleswitch.market_data import PRICE_COLUMNS, REPORT_COLUMNS


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("fixture")
    synthetic.write_fixture(out)
    return out


@pytest.fixture(scope="session")
def fixture_config(fixture_dir):
    return config.load_config(fixture_dir / "config.yaml")


@pytest.fixture(scope="session")
def market(fixture_config):
    return engine.load_market(fixture_config)


@pytest.fixture(scope="session")
def population():
    return agents.build_population()


@pytest.fixture(scope="session")
def rule_run(fixture_config, market, population):
    return engine.run(fixture_config, market, population)


def weekdays(start: date, n: int) -> list[date]:
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def write_prices(path: Path, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PRICE_COLUMNS)
        for r in rows:
            w.writerow(r)
    return path


def write_reports(path: Path, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow(r)
    return path


def flat_bar_rows(days, close=100.0, volume=1000.0):
    return [[d.isoformat(), close, close, close, close, volume, 0.0, 1.0] for d in days]


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; printed together at the end of the session."""
    def record(label: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from __future__ import annotations

import csv
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

DATASETS = ("rap1", "rap2", "rapzs")


def pytest_runtest_logreport(report):
    """One visible verdict line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    outcome = ("PASS" if report.passed
               else "SKIP" if report.skipped else "FAIL")
    name = report.nodeid.split("::")[-1]
    print(f"[acceptance] {outcome} {name}")


def read_csv(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def scorer_inputs() -> dict[str, list[dict]]:
    return {ds: read_csv(FIXTURES / f"scorer_inputs_{ds}.csv")
            for ds in DATASETS}


@pytest.fixture(scope="session")
def expected_scores() -> dict[str, list[dict]]:
    return {ds: read_csv(FIXTURES / f"expected_scores_{ds}.csv")
            for ds in DATASETS}


@pytest.fixture(scope="session")
def expected_top20() -> dict[str, list[str]]:
    rows = read_csv(FIXTURES / "expected_top20.csv")
    return {ds: [r[ds] for r in rows] for ds in DATASETS}


@pytest.fixture(scope="session")
def expected_top10() -> dict[str, list[str]]:
    rows = read_csv(FIXTURES / "expected_top10.csv")
    return {ds: [r[ds] for r in rows] for ds in DATASETS}


@pytest.fixture(scope="session")
def expected_aggregation() -> list[tuple[str, int]]:
    rows = read_csv(FIXTURES / "expected_aggregation.csv")
    return [(r["attribute"], int(r["datasets_in_top20"])) for r in rows]

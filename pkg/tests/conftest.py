"""Shared fixtures: the two session-scoped benchmark reports (several
acceptance criteria read the same run) and a per-criterion result line
printed for everything in test_acceptance.py."""

import sys

import pytest

from kda.benchmark import BenchmarkDescriptor, run_benchmark


@pytest.fixture(scope="session")
def default_report() -> dict:
    """The default descriptor run: 100 customers x 100 tx, 16 injected."""
    return run_benchmark(BenchmarkDescriptor())


@pytest.fixture(scope="session")
def normal_report() -> dict:
    """Same population with no injected anomalies."""
    return run_benchmark(BenchmarkDescriptor(fraud=None))


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    outcome = "PASS" if report.passed else ("FAIL" if report.failed else "SKIPPED")
    sys.stdout.write(f"\n[acceptance] {name}: {outcome}\n")
    sys.stdout.flush()

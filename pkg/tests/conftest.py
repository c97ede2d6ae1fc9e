import os

import pytest
from hypothesis import HealthCheck, settings

from tamperlock.ldpc import PrcKey

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=300)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def prc_key():
    """Default-parameter LDPC key (n=512, r=128, w=6), fixed seed."""
    return PrcKey.generate(seed=0)


@pytest.fixture(scope="session")
def small_prc_key():
    return PrcKey.generate(n=64, r=16, row_weight=3, seed=1)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(tag: str, ok: bool, detail: str):
        line = f"{tag:<4} {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import math

import pytest

from swesat.model import FlowConfig

# (label, U / sqrt(gH)) for every regime and flow direction
REGIME_CASES = [
    ("sub+", 0.5),
    ("sub-", -0.5),
    ("critical+", 1.0),
    ("critical-", -1.0),
    ("super+", 2.0),
    ("super-", -2.0),
]

ACCEPTANCE_LINES: list[str] = []


def flow(multiple: float, g: float = 9.8, H: float = 1.0) -> FlowConfig:
    return FlowConfig(g=g, H=H, U=multiple * math.sqrt(g * H))


@pytest.fixture(params=REGIME_CASES, ids=[label for label, _ in REGIME_CASES])
def regime_flow(request) -> FlowConfig:
    return flow(request.param[1])


@pytest.fixture
def record_criterion():
    """Print a one-line verdict for an acceptance criterion, then assert it."""

    def record(number: int, title: str, passed: bool, detail: str):
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

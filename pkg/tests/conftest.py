"""Shared fixtures and the acceptance-summary hook."""

import numpy as np
import pytest

from relucx import AffineLayer, ReluNetwork

# Results registered by tests/test_acceptance.py: list of (number, ok, detail).
ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


def register_criterion(number: int, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((number, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if ok else "FAIL"
        line = f"CRITERION {number} {verdict}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


def make_hand_net() -> ReluNetwork:
    """(2,2,1) net: identity first layer, output relu(x) + relu(y) - 1."""
    return ReluNetwork(
        (2, 2, 1),
        (
            AffineLayer(np.eye(2), np.zeros(2)),
            AffineLayer(np.array([[1.0, 1.0]]), np.array([-1.0])),
        ),
    )


@pytest.fixture
def hand_net() -> ReluNetwork:
    return make_hand_net()

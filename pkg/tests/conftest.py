"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

from __future__ import annotations

from collections import defaultdict

import pytest

CRITERIA = {
    1: "ring laws",
    2: "order-2 coefficient regression",
    3: "order-3 coefficient regression with explicit verdicts",
    4: "Riccati contract for orders 2 and 3",
    5: "intertwining catalog, symbolic and numeric",
    6: "inverse-square Klein-Gordon step end to end",
    7: "hyperbolic family potential and solution map",
    8: "eigenfunctions of the inverse-square and sinh potentials",
    9: "Darboux transform preserves order and annihilates transforms",
    10: "factorization of second-order operators",
    11: "Weber solutions",
    12: "depth-2 chain with finite-difference verification",
    13: "parser round trip and fuzzing",
    14: "deterministic reports",
}

_outcomes: dict[int, list[bool]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _outcomes[marker.args[0]].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        tr.write_line(f"criterion {n:2d}: {status:7s} {title}")

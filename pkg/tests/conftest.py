"""Shared fixtures, independent oracles and the acceptance summary hook."""

from __future__ import annotations

import itertools
import math
import re

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list = []


def record_acceptance(criterion: int, name: str, passed: bool, detail: str) -> None:
    """Store one pass/fail line; they are printed at the end of the session."""
    line = f"[criterion {criterion}] {'PASS' if passed else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


# ------------------------------------------------------------ oracles
# These are deliberately naive and share no code with the package.

SQUARE = re.compile(r"(.+)\1")


def has_square_regex(seq) -> bool:
    """Square detection via a backreference regex over a character encoding."""
    return SQUARE.search("".join(chr(0x100 + c) for c in seq)) is not None


def has_square_naive(seq) -> bool:
    n = len(seq)
    return any(list(seq[i:i + h]) == list(seq[i + h:i + 2 * h])
               for h in range(1, n // 2 + 1) for i in range(n - 2 * h + 1))


def full_probability(weights, holds) -> float:
    """P(holds) by enumerating the whole product space."""
    total = 0.0
    for combo in itertools.product(*(range(len(w)) for w in weights)):
        if holds(combo):
            total += math.prod(w[c] for w, c in zip(weights, combo))
    return total


def neighbour_sets_quadratic(footprints):
    """Dependency neighbourhoods by comparing every pair of footprints."""
    m = len(footprints)
    return [sorted(b for b in range(m) if b != a and set(footprints[a]) & set(footprints[b]))
            for a in range(m)]


@pytest.fixture
def data_path():
    from lllkit.data import path
    return path

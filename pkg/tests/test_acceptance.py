"""Acceptance suite: each criterion runs at its stated tolerance and prints one
pass/fail line. Runtime limits are checked alongside the numerical checks."""

import pytest

from conftest import ACCEPTANCE_LINES

from pottsmix import acceptance

# seconds allowed per criterion
LIMITS = {1: 30, 2: 120, 3: 10, 4: 60, 5: 60, 6: 120, 7: 5, 8: 60, 9: 60, 10: 5, 11: 10, 12: 120, 13: 60}


@pytest.mark.parametrize("number", range(1, 14))
def test_criterion(number):
    result = acceptance.CRITERIA[number - 1]()
    print(result.line())
    ACCEPTANCE_LINES.append(result.line())
    assert result.number == number
    assert result.passed, result.detail
    assert result.seconds < LIMITS[number], f"took {result.seconds:.1f}s, limit {LIMITS[number]}s"

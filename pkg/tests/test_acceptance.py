"""Acceptance criteria 1 to 9.

Each test runs one check from :mod:`g2sphere.verify` at its stated
tolerance, prints a ``PASS``/``FAIL`` line and asserts the outcome.  The
lines are repeated in the terminal summary.
"""

import pytest

from g2sphere.verify import CRITERIA, run_all


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda k: f"criterion_{k}")
def test_criterion(number, acceptance_log):
    result = run_all(only=[number])[0]
    line = result.line()
    print(line)
    acceptance_log.append(line)
    assert result.passed, line

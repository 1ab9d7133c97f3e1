"""The eleven acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; ``conftest.py`` repeats them in the
terminal summary so they appear without ``-s``.
"""

import pytest

from curvkit import selftest

LINES = []


@pytest.mark.parametrize("criterion", selftest.CRITERIA, ids=lambda c: c.__name__)
def test_criterion(criterion):
    result = criterion()
    print(result.line())
    LINES.append(result.line())
    assert result.passed, result.detail + "".join(f"\n  {f}" for f in result.failures[:10])

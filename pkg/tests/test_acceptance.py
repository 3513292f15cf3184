"""Acceptance suite: every primary criterion at its full tolerance.

Each test prints one ``[PASS]``/``[FAIL]`` line. The three Monte Carlo
criteria take a few minutes together on one core.
"""

import pytest

from qdpanel.validation import CRITERIA, run_validation

ORDER = ("scenarios", "permanent", "recovery", "consistency", "bias_contrast",
         "anticipation", "size", "geometry", "identities")


def test_registry_covers_every_criterion():
    assert set(ORDER) == set(CRITERIA)


@pytest.mark.parametrize("name", ORDER)
def test_criterion(name, capsys):
    (result,) = run_validation([name], B=100)
    assert result.mode == "full"
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()

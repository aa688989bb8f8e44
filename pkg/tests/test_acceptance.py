"""Acceptance criteria 1-11 at their stated tolerances.

Each test prints one PASS/FAIL line.  Run directly (``python tests/test_acceptance.py``)
to get the eleven lines without pytest.
"""

import sys

import pytest

from waveturb.acceptance import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    verdict = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + verdict.line(), flush=True)
    assert verdict.passed, verdict.detail


if __name__ == "__main__":
    from waveturb.acceptance import run_acceptance

    sys.exit(0 if all(v.passed for v in run_acceptance()) else 1)

"""One test per acceptance criterion, each at its stated tolerance.

Every criterion adds a PASS/FAIL line to the terminal summary. Running this
file directly prints the same lines without pytest.
"""

import sys

import pytest

from nvpl import verify

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_LINES = {}


@pytest.mark.acceptance
@pytest.mark.parametrize("number", sorted(verify.CRITERIA))
def test_criterion(number):
    result = verify.evaluate(number)
    line = result.summary()
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert result.passed, result.report()


def test_verify_flags_a_coarse_step():
    results = verify.run_all([10], verify.Settings(dt=100e-9))
    assert not results[0].passed


def test_literal_convention_is_reported(capsys):
    from nvpl.cli import main

    note = verify.embedding_note()
    assert "1.414214" in note
    main(["verify", "--only", "2", "--rabi-convention", "eq4_literal"])
    out = capsys.readouterr().out
    assert "1.414214" in out and "sqrt 2 slower" in out


if __name__ == "__main__":
    results = verify.run_all()
    for r in results:
        print(r.summary())
    sys.exit(0 if all(r.passed for r in results) else 1)

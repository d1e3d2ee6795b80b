"""Acceptance suite: one test per numbered criterion, one PASS/FAIL line each."""

import json

import pytest

from nodalheat.acceptance import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(ws, number, capsys):
    result = CRITERIA[number](ws)
    with capsys.disabled():
        print(f"\n{result.line()}")
    assert result.passed, json.dumps(result.to_dict(), default=str, indent=1)

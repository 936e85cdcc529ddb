import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from repssd import EffectEstimate  # noqa: E402

# the worked example used throughout
LABELS = EffectEstimate(0.205, 0.051)


@pytest.fixture
def labels():
    return LABELS


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    lines = getattr(acc, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

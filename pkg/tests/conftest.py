import pytest

from crb_loc import bias_models as bm
from crb_loc.geometry import make_scenario

SQUARE = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]
TARGET = (3.0, 4.0)

_ACCEPTANCE_LINES = []


def default_scenario(delta=0.1, model=None):
    model = model if model is not None else bm.table_one_pdf(delta)
    return make_scenario(SQUARE, TARGET, 1.0, [0], [model])


@pytest.fixture
def report():
    """Record one acceptance criterion as a PASS/FAIL line, then assert it."""

    def _report(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
        if detail:
            line += f" | {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import pytest

_LINES = []


@pytest.fixture
def record():
    """Record one ``PASS``/``FAIL`` line for an acceptance criterion."""

    def _record(number, title, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d} ({title}): {detail}"
        _LINES.append((number, line))
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)

import pytest

_LINES = []


@pytest.fixture
def acceptance():
    """Call with (number, title, ok, detail); the line is echoed and summarized."""
    def record(number, title, ok, detail=""):
        line = f"[{number:>2}] {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip()
        _LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)

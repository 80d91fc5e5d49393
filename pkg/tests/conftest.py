import pytest

_CRITERIA: dict[str, str] = {}


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion and return ``ok``."""

    def _report(key: str, label: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {label}"
        if detail:
            line += f" | {detail}"
        _CRITERIA[key] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(k.rstrip("abcdefgh")), k)):
        terminalreporter.write_line(_CRITERIA[key])

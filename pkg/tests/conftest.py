"""Collects one pass/fail line per acceptance criterion and prints them at the end."""
import pytest

_RESULTS: dict = {}


@pytest.fixture
def criterion_log():
    def record(number: int, ok: bool, detail: str):
        _RESULTS.setdefault(number, []).append((ok, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entries = _RESULTS[number]
        ok = all(e[0] for e in entries)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}")
        for passed, detail in entries:
            terminalreporter.write_line(f"    [{'ok' if passed else 'x '}] {detail}")

import pytest

# (criterion number, passed, detail) appended by tests/test_acceptance.py
ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance():
    def report(k: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append((k, ok, detail))
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

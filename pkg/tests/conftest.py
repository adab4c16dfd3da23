import pytest

# (criterion number, title, passed, detail) filled in by test_acceptance.py
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def acceptance():
    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        ACCEPTANCE.append((number, title, bool(passed), detail))
        print(f"ACCEPTANCE {number} {'PASS' if passed else 'FAIL'}: {title}: {detail}")
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")

import pytest

# criterion number -> (passed, one-line detail), filled by test_acceptance.py
ACCEPTANCE = {}


def record(num, title, passed, detail):
    ACCEPTANCE[num] = (title, bool(passed), detail)
    print(f"[{'PASS' if passed else 'FAIL'}] {num}. {title}: {detail}")


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")

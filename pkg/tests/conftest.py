import pytest

# criterion number -> (passed, detail), filled in by test_acceptance.py
CRITERIA = {}


def record(num, passed, detail=""):
    CRITERIA[num] = (bool(passed), detail)
    print(f"criterion {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        passed, detail = CRITERIA[num]
        terminalreporter.write_line(
            f"criterion {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

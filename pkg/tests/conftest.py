import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# (criterion number, title, PASS/FAIL, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, status, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{status} [{n:2d}] {title}: {detail}")

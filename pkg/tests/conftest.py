from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> list of (label, passed, detail), filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture
def fixtures():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        ok = all(p for _, p, _ in parts)
        failed = [f"{label}: {detail}" for label, p, detail in parts if not p]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}"
        line += "  " + "; ".join(label for label, _, _ in parts)
        if failed:
            line += "  | " + " | ".join(failed)
        terminalreporter.write_line(line)

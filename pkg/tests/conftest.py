import pytest

VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record a ``CRITERION n: PASS|FAIL`` line and return whether it passed."""

    def record(number: int, checks: dict[str, bool], detail: str = "") -> bool:
        ok = all(checks.values())
        failed = [name for name, good in checks.items() if not good]
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  [{detail}]"
        if failed:
            line += f"  failed: {', '.join(failed)}"
        VERDICTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)

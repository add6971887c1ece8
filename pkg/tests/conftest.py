import time

import pytest

_LINES: list[str] = []


class AcceptanceReport:
    """Collects named checks for one criterion and emits a single result line."""

    def __init__(self, number: int, time_limit: float):
        self.number = number
        self.time_limit = time_limit
        self.checks: dict[str, bool] = {}
        self.details: list[str] = []
        self._start = time.perf_counter()

    def check(self, name: str, ok) -> None:
        self.checks[name] = bool(ok)

    def note(self, text: str) -> None:
        self.details.append(text)

    def finish(self) -> None:
        elapsed = time.perf_counter() - self._start
        self.check(f"runtime<{self.time_limit:g}s", elapsed < self.time_limit)
        failed = [k for k, ok in self.checks.items() if not ok]
        status = "FAIL" if failed else "PASS"
        parts = [f"{elapsed:.2f}s"] + self.details
        if failed:
            parts.append("failed: " + ", ".join(failed))
        line = f"ACCEPTANCE {self.number}: {status} " + "; ".join(parts)
        _LINES.append(line)
        print(line)
        assert not failed, line


@pytest.fixture
def acceptance():
    return AcceptanceReport


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

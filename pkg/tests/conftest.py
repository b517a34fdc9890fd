"""Shared fixtures and the per-criterion pass/fail reporter."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import pytest

_LINES: dict[int, str] = {}


@dataclass
class Criterion:
    """Collects sub-checks for one acceptance criterion and reports a single line."""

    number: int
    title: str
    checks: list[tuple[str, bool, str, bool]] = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = "", known_failure: bool = False) -> bool:
        """Record a sub-check; ``known_failure`` marks one asserted elsewhere as xfail."""
        self.checks.append((name, bool(ok), detail, known_failure))
        return bool(ok)

    @property
    def failures(self) -> list[str]:
        """Failed sub-checks that this test is expected to assert."""
        return [f"{n}: {d}" for n, ok, d, known in self.checks if not ok and not known]

    def report(self) -> None:
        ok = all(c[1] for c in self.checks)
        bad = [f"{n} ({d})" + (" [known failure]" if known else "")
               for n, good, d, known in self.checks if not good]
        status = "PASS" if ok else "FAIL"
        tail = f"{len(self.checks)} checks" if ok else "; ".join(bad)
        line = f"criterion {self.number:2d} {status}  {self.title}: {tail}"
        _LINES[self.number] = line
        sys.stdout.write(line + "\n")

    def assert_ok(self) -> None:
        self.report()
        assert not self.failures, "\n".join(self.failures)


@pytest.fixture
def criterion():
    made = []

    def make(number: int, title: str) -> Criterion:
        c = Criterion(number, title)
        made.append(c)
        return c

    return make


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_LINES):
        terminalreporter.write_line(_LINES[k])

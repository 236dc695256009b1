import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from percolab import oracle  # noqa: E402

# lines reported by the acceptance suite, printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def exact_n1(stat: str):
    """Exact value at n=1; each statistic costs a 4096-configuration sweep."""
    return oracle.exact(stat, n=1)


@pytest.fixture(scope="session")
def exact1():
    return exact_n1


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)

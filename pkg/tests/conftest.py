import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion outcome, then assert it."""
    results = request.config.stash.setdefault(_RESULTS, [])

    def check(number: int, description: str, ok: bool, detail: str = ""):
        results.append((number, description, bool(ok), detail))
        assert ok, f"criterion {number} failed: {description} {detail}"

    return check


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, ok, detail in sorted(results, key=lambda r: r[0]):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {number}. {description}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)

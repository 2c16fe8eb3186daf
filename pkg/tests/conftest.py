import json
from pathlib import Path

import pytest

from tttbench.enumerator import enumerate_pool
from tttbench.topology import build_spec

FIXTURES = Path(__file__).parent / "fixtures"

# filled by test_acceptance; printed once at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def golden():
    return json.loads((FIXTURES / "golden_questions.json").read_text(encoding="utf-8"))


_POOLS: dict = {}


def scheduled_pool(game: str, n: int):
    key = (game, n)
    if key not in _POOLS:
        _POOLS[key] = enumerate_pool(build_spec(game), n)
    return _POOLS[key]


@pytest.fixture(scope="session")
def pool():
    """Cached scheduled pool lookup: ``pool("dTTT", 6)``."""
    return scheduled_pool

from pathlib import Path

import pytest

from moo_kserver.miner import load_tree
from moo_kserver.streamgen import reference_sparse_matrix

DATA = Path(__file__).parent / "data"

# filled by test_acceptance; printed once at the end of the session
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def cycle_tree():
    return load_tree((DATA / "cycle_tree.txt").read_text())


@pytest.fixture(scope="session")
def cycle_matrix():
    return reference_sparse_matrix()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")

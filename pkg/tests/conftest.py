import os

import pytest

# worker count must come from the tests, not the caller's shell
os.environ.pop("KCOV_WORKERS", None)

CRITERIA = [f"C{i}" for i in range(1, 14)]
RESULTS: dict[str, tuple[str, str]] = {}


def record(cid: str, status: str, detail: str) -> None:
    RESULTS[cid] = (status, detail)


@pytest.fixture
def criterion():
    """check(cid, ok, detail): record a pass/fail line, then assert."""

    def check(cid: str, ok: bool, detail: str) -> None:
        record(cid, "PASS" if ok else "FAIL", detail)
        assert ok, f"{cid}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in CRITERIA:
        status, detail = RESULTS.get(cid, ("NOT RUN", ""))
        tr.write_line(f"{cid:<4} {status:<5} {detail}")

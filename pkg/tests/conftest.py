from datetime import datetime, timedelta, timezone

import pytest

from gridpv.ingest import OutageEvent, SubstationRecord, SubstationRegistry

T0 = datetime(2014, 1, 1, tzinfo=timezone.utc)


def make_event(eid, sub="A", minutes=60, customers=50, start=None, day=0.0):
    start = start or T0 + timedelta(days=day)
    return OutageEvent(str(eid), sub, start, start + timedelta(minutes=minutes), customers, None)


def make_registry(customers=(100, 200), ids=None):
    ids = ids or [chr(ord("A") + i) for i in range(len(customers))]
    return SubstationRegistry(SubstationRecord(sid, -86.1 + 0.01 * i, 39.7 + 0.01 * i, int(n))
                              for i, (sid, n) in enumerate(zip(ids, customers)))


@pytest.fixture
def registry():
    return make_registry()


ACCEPTANCE_LINES: list[str] = []


def record_criterion(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

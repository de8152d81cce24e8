from collections import defaultdict

import pytest

from faddeev import solver

CRITERIA: dict = defaultdict(list)


@pytest.fixture(scope="session")
def desk_setup():
    return solver.ScatteringSetup.build(solver.DESK)


@pytest.fixture
def record():
    """``record(n, ok, detail)`` adds one checked part to acceptance criterion ``n``."""

    def add(n: int, ok: bool, detail: str) -> bool:
        CRITERIA[n].append((bool(ok), detail))
        print(f"criterion {n}: {'pass' if ok else 'FAIL'}: {detail}")
        return bool(ok)

    return add


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        parts = CRITERIA[n]
        ok = all(p for p, _ in parts)
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} | " + "; ".join(d for _, d in parts))

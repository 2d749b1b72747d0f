import pytest

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Record an acceptance line: ``record("1 volume", ok, "detail")``."""

    def _record(name, ok, detail=""):
        ACCEPTANCE[name] = (bool(ok), detail)
        return ok

    return _record


def pytest_runtest_makereport(item, call):
    # a criterion whose test raised before recording still gets a FAIL line
    if call.when == "call" and call.excinfo is not None:
        name = getattr(item.function, "criterion", None)
        if name and name not in ACCEPTANCE:
            ACCEPTANCE[name] = (False, f"raised {call.excinfo.typename}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {name}: {detail}")

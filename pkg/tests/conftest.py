import pytest

from esdlink.params import reference_settings

ACCEPTANCE_LOG: list[tuple[str, bool, str]] = []


@pytest.fixture
def ref():
    return reference_settings(0.99)


@pytest.fixture
def ref_half():
    return reference_settings(0.5)


@pytest.fixture
def criterion():
    """Record one acceptance line, then assert it."""
    def record(name: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_LOG.append((name, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, f"{name}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LOG:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

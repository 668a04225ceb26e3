import pytest

from pncpon import config

_ACCEPTANCE = []


def record(criterion: str, ok: bool, detail: str = "") -> None:
    """Log one acceptance line; the summary hook prints them after the run."""
    _ACCEPTANCE.append((criterion, ok, detail))
    print(f"{'PASS' if ok else 'FAIL'} {criterion} {detail}")


@pytest.fixture(scope="session")
def default_cfg():
    return config.load("fig4")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

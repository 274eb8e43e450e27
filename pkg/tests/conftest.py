import pytest

_RESULTS = {}


class AcceptanceRecorder:
    """Collects one verdict line per acceptance criterion."""

    def record(self, number: int, passed: bool, detail: str) -> bool:
        _RESULTS[number] = (passed, detail)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        passed, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

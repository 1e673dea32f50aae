import warnings

import pytest

from sbmlss.cycles import SparsePlugInWarning

ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture(autouse=True)
def _quiet_plugin_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SparsePlugInWarning)
        yield


@pytest.fixture
def record_criterion():
    """Store (title, passed, detail) for the acceptance summary printed at the end of the run."""

    def _record(number: int, title: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, ok, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]")

import numpy as np
import pytest

_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record_criterion(request):
    """Record an acceptance verdict; all verdicts are listed at the end of the run."""
    store = request.config.stash.setdefault(_CRITERIA, {})

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        store[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_CRITERIA, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(store):
        terminalreporter.write_line(store[k])

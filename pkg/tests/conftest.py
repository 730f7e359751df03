from collections import defaultdict

import pytest

_verdicts = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_verdicts] = defaultdict(list)


@pytest.fixture
def verdict(request):
    """Record ``(criterion, label, ok, detail)`` sub-checks for the summary table."""
    store = request.config.stash[_verdicts]

    def record(criterion: int, label: str, ok: bool, detail: str = ""):
        store[criterion].append((label, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash[_verdicts]
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(store):
        checks = store[crit]
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        terminalreporter.write_line(f"criterion {crit}: {status}")
        for label, ok, detail in checks:
            terminalreporter.write_line(f"    [{'ok' if ok else 'XX'}] {label}: {detail}")

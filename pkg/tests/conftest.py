import pytest

# criterion number -> list of (part, passed, detail)
_RESULTS: dict = {}


@pytest.fixture
def criterion(request):
    """Record one checked part of an acceptance criterion."""
    n = request.node.get_closest_marker("criterion").args[0]

    def record(part, passed, detail=""):
        _RESULTS.setdefault(n, []).append((part, bool(passed), detail))
        print(f"criterion {n} [{part}]: {'PASS' if passed else 'FAIL'} {detail}")
        return bool(passed)

    return record


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" or not rep.failed:
        return
    n = marker.args[0]
    if not any(p for p, ok, _ in _RESULTS.get(n, []) if not ok):
        # the test died before recording a failing part
        _RESULTS.setdefault(n, []).append((item.name, False, f"error: {call.excinfo.typename}"))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for n in sorted(_RESULTS):
        parts = _RESULTS[n]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{p}: {'ok' if good else 'FAILED'} ({d})" if d else
                           f"{p}: {'ok' if good else 'FAILED'}" for p, good, d in parts)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} | {detail}")

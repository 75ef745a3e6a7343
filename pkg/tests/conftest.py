"""Shared pytest hooks.

Tests marked ``@pytest.mark.criterion(n)`` are acceptance checks.  Each one
gets a single PASS/FAIL line in the terminal summary, together with whatever
measured values the test stored through the ``detail`` fixture.
"""

import pytest

_RESULTS = {}
_DETAILS = {}


@pytest.fixture
def detail(request):
    """Callable that records a short human-readable measurement for the summary."""
    def note(text):
        _DETAILS.setdefault(request.node.nodeid, []).append(str(text))
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _RESULTS[item.nodeid] = (marker.args[0], item.name, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for nodeid, (n, name, ok) in sorted(_RESULTS.items(), key=lambda kv: kv[1][0]):
        info = "; ".join(_DETAILS.get(nodeid, []))
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {name}"
                      + (f"  [{info}]" if info else ""))

"""Shared pytest hooks: print one PASS/FAIL line per acceptance criterion."""

_acceptance_results = {}


def pytest_runtest_makereport(item, call):
    if call.when != "call":
        return
    if item.module.__name__ != "test_acceptance":
        return
    label = getattr(item.function, "_criterion", None)
    if label is None:
        return
    outcome = "PASS" if call.excinfo is None else "FAIL"
    # keep the worst outcome if a criterion spans several tests
    if _acceptance_results.get(label) != "FAIL":
        _acceptance_results[label] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_acceptance_results):
        terminalreporter.write_line(f"{label}: {_acceptance_results[label]}")

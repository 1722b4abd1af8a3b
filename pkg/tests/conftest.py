import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, detail in results:
        terminalreporter.write_line(f"criterion {criterion:<7} {status}  {detail}")

import re

_results = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.failed:
        props = dict(report.user_properties)
        prev = _results.get(n)
        if prev is None or prev[0]:
            _results[n] = (report.passed, props.get("measured", ""))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_results):
        ok, measured = _results[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}"
        if measured:
            line += f"  {measured}"
        terminalreporter.write_line(line)

import re

_acceptance: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"test_c(\d+)_", report.nodeid)
    if not m:
        return
    key = m.group(1)
    if report.when == "call" or report.failed or report.skipped:
        detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
        outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        if key not in _acceptance or outcome != "PASS":
            _acceptance[key] = (outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance, key=int):
        outcome, detail = _acceptance[key]
        terminalreporter.write_line(f"criterion {int(key):2d}: {outcome}  {detail}")

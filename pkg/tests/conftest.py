import pytest

_criteria: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion covered by the test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    cid, title = marker.args
    if call.when == "setup" and call.excinfo is not None:
        _criteria[cid] = (title, "FAIL")
    elif call.when == "call":
        _criteria[cid] = (title, "FAIL" if call.excinfo is not None else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_criteria, key=lambda c: int(c.lstrip("AC"))):
        title, status = _criteria[cid]
        terminalreporter.write_line(f"[{status}] {cid} {title}")

import pytest

# criterion number -> (title, [(passed, details), ...])
_CRITERIA: dict[int, tuple[str, list]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    number, title = marker.args
    details = "; ".join(v for k, v in item.user_properties if k == "detail")
    _CRITERIA.setdefault(number, (title, []))[1].append((report.passed, details))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, cases = _CRITERIA[number]
        ok = all(passed for passed, _ in cases)
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}"
        if len(cases) > 1:
            line += f" [{sum(p for p, _ in cases)}/{len(cases)} cases]"
        details = "; ".join(d for _, d in cases if d)
        if details:
            line += f" ({details})"
        terminalreporter.write_line(line)

import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title, limit): acceptance criterion with a time limit in seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title, limit = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        # a criterion may be split over several tests: all must pass
        _, ok, dur, _ = _results.get(n, (title, True, 0.0, limit))
        _results[n] = (title, ok and rep.passed, dur + rep.duration, limit)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        title, ok, dur, limit = _results[n]
        lim = f"limit {limit:g} s" if limit else "no limit"
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {n:>2}. {title}  ({dur:.1f} s, {lim})")

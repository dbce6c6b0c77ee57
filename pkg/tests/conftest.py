import pytest

_RESULTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(rep.user_properties).get("detail", "")
        item.config.stash[_RESULTS_KEY].append((marker.args[0], marker.args[1], rep.passed, detail))


def pytest_terminal_summary(terminalreporter, config):
    results = sorted(config.stash[_RESULTS_KEY])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in results:
        line = f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)

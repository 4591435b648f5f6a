import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def acceptance_report(request):
    """Append a one-line acceptance summary; lines are echoed at the end of the run."""
    return request.config.stash[_LINES]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)

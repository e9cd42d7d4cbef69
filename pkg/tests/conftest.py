import _gate


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _gate.VERDICTS:
        terminalreporter.section("acceptance gate")
        for line in _gate.VERDICTS:
            terminalreporter.write_line(line)

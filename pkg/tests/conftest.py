def pytest_terminal_summary(terminalreporter):
    from test_acceptance import DIAGNOSTICS, RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
        for line in DIAGNOSTICS:
            terminalreporter.write_line(line)

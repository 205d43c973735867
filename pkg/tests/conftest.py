import pytest


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance_report(request):
    """Record one PASS/FAIL line per acceptance criterion and assert it."""
    lines = request.config._acceptance_lines

    def report(name, ok, detail):
        line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        lines.append(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import helpers  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if helpers.ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in helpers.ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)

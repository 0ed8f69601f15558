import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from heisembed.graphs import from_edge_list  # noqa: E402

_LINES = []


def record_criterion(line: str):
    _LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)


def complete_graph(n):
    return from_edge_list(n, [(u, v) for u in range(n) for v in range(u + 1, n)])

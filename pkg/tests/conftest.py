import numpy as np
import pytest

from sparseclt.gwtree import RootedTree
from sparseclt.wgraph import WeightedGraph

# acceptance results collected by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[cid])


@pytest.fixture
def triangle():
    return WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])


@pytest.fixture
def path3():
    # a - b - c with weights 5, 3
    return WeightedGraph.from_edges(3, [(0, 1, 5.0), (1, 2, 3.0)])


def star(weights):
    return WeightedGraph.from_edges(len(weights) + 1, [(0, i + 1, w) for i, w in enumerate(weights)])


def star_tree(weights):
    return RootedTree([-1] + [0] * len(weights), [np.nan] + list(weights))

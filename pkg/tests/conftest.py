import numpy as np
import pytest

from consensus_forge.fixtures import example1, example2, example2_k6zero, oscillator
from consensus_forge.graph import SpanningTree, Topology, extract_dst, renumber


@pytest.fixture
def osc():
    return oscillator()


@pytest.fixture
def ex1():
    sc = example1()
    return sc, renumber(extract_dst(sc.topology, sc.root))


@pytest.fixture
def ex2():
    sc = example2()
    return sc, renumber(extract_dst(sc.topology, sc.root))


@pytest.fixture
def ex2_zero():
    sc = example2_k6zero()
    return sc, renumber(extract_dst(sc.topology, sc.root))


def random_tree(rng, N):
    """Random labeled tree: a random root, each other vertex attached to an earlier one."""
    order = rng.permutation(np.arange(1, N + 1)).tolist()
    parent = {}
    for k in range(1, N):
        parent[order[k]] = order[rng.integers(0, k)]
    weights = {v: float(rng.uniform(0.5, 2.0)) for v in parent}
    return SpanningTree(root=order[0], parent=parent, edge_weight=weights)


def topology_with_tree(rng, tree, extra=0.3):
    """Topology containing ``tree``'s edges plus random extra edges."""
    N = tree.N
    W = np.where(rng.random((N, N)) < extra, rng.uniform(0.5, 2.0, (N, N)), 0.0)
    np.fill_diagonal(W, 0.0)
    for c, p in tree.parent.items():
        W[c - 1, p - 1] = tree.edge_weight[c]
    return Topology(W)


def random_digraph(rng, N, density):
    W = (rng.random((N, N)) < density).astype(float)
    np.fill_diagonal(W, 0.0)
    return Topology(W)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

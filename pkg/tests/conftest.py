import numpy as np
import pytest

from gfnn.graph import build_graph


def dense_adjacency(g):
    A = np.zeros((g.n, g.n))
    for u, v in g.edges:
        A[u, v] = A[v, u] = 1.0
    return A


def random_graph(n, p, seed, connected=False):
    """Small G(n, p) built edge by edge; optionally patched with a path to be connected."""
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    if connected:
        edges += [(i, i + 1) for i in range(n - 1)]
    return build_graph(edges, n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Filled by test_acceptance.py; one entry per criterion number.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{status}] {num}. {title}: {detail}")

"""Undirected unweighted graphs, degree bookkeeping and propagation operators.

Self-loops never live in the edge set.  They enter through the augmentation
weight ``gamma`` (``A + gamma*I``), so every function that needs them takes
``gamma`` explicitly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels

KINDS = ("leftnorm", "augnorm", "bilateral")


class GraphError(ValueError):
    """Raised on malformed graphs or operators that cannot be formed."""


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph in CSR neighbour-list form.

    ``edges`` holds each undirected edge once as ``(u, v)`` with ``u < v``,
    sorted lexicographically; ``indptr``/``indices`` hold both orientations.
    """

    n: int
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    degree: np.ndarray

    @property
    def num_edges(self):
        return int(self.edges.shape[0])

    def neighbors(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def adjacency(self):
        data = np.ones(self.indices.shape[0])
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def laplacian(self):
        return (sp.diags(self.degree) - self.adjacency()).tocsr()

    def dtilde(self, gamma):
        return augmented_degrees(self, gamma).dtilde

    def has_isolated(self):
        return bool(np.any(self.degree == 0))


@dataclass(frozen=True)
class AugmentedDegrees:
    gamma: float
    dtilde: np.ndarray


def augmented_degrees(g, gamma):
    if gamma < 0:
        raise GraphError(f"gamma must be non-negative, got {gamma}")
    return AugmentedDegrees(float(gamma), _frozen(g.degree + float(gamma)))


def build_graph(edge_list, n):
    """Deduplicate and symmetrize ``edge_list`` into a :class:`Graph`.

    Pairs may repeat and appear in either orientation.  Self-loop pairs and
    endpoints outside ``[0, n)`` raise :class:`GraphError`.
    """
    n = int(n)
    if n < 0:
        raise GraphError("vertex count must be non-negative")
    e = np.asarray(edge_list, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= n):
        raise GraphError(f"edge endpoint out of range [0, {n})")
    if np.any(e[:, 0] == e[:, 1]):
        bad = e[e[:, 0] == e[:, 1]][0]
        raise GraphError(f"self-loop ({bad[0]}, {bad[1]}) in edge list; use gamma instead")
    e = np.sort(e, axis=1)
    e = np.unique(e, axis=0)
    both = np.concatenate([e, e[:, ::-1]], axis=0)
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return Graph(
        n=n,
        edges=_frozen(e),
        indptr=_frozen(indptr),
        indices=_frozen(both[:, 1].copy()),
        degree=_frozen(counts.astype(np.float64)),
    )


def _check_rows(g, X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != g.n:
        raise GraphError(f"signal has {X.shape[0]} rows, graph has {g.n} vertices")
    return X


def variation(g, x):
    """Sum of squared differences across edges, i.e. ``x^T L x``."""
    x = _check_rows(g, x)
    if x.ndim != 1:
        raise GraphError("variation expects a single signal")
    diff = x[g.edges[:, 0]] - x[g.edges[:, 1]]
    return float(diff @ diff)


def d_inner(g, gamma, x, y):
    """Degree-weighted inner product ``sum_i (d(i) + gamma) x(i) y(i)``.

    Matrix arguments are treated column-wise and summed (Frobenius form).
    """
    if gamma < 0:
        raise GraphError(f"gamma must be non-negative, got {gamma}")
    x = _check_rows(g, x)
    y = _check_rows(g, y)
    if x.shape != y.shape:
        raise GraphError(f"shape mismatch {x.shape} vs {y.shape}")
    w = g.degree + gamma
    if x.ndim == 1:
        return float(np.sum(w * x * y))
    return float(np.sum(w[:, None] * x * y))


def d_norm(g, gamma, x):
    return float(np.sqrt(max(d_inner(g, gamma, x, x), 0.0)))


# ---------------------------------------------------------------------------
# Propagation operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FilterSpec:
    """Propagation operator description.

    kind: ``leftnorm`` (D~^-1 A~), ``augnorm`` (D~^-1/2 A~ D~^-1/2) or
    ``bilateral`` (alpha D^-1/2 A D^-1/2, no augmentation).
    """

    kind: str = "leftnorm"
    gamma: float = 1.0
    k: int = 2
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GraphError(f"unknown filter kind {self.kind!r}; expected one of {KINDS}")
        if self.gamma < 0:
            raise GraphError("gamma must be non-negative")
        if int(self.k) != self.k or self.k < 0:
            raise GraphError("k must be a non-negative integer")
        if not (0.0 < self.alpha <= 1.0):
            raise GraphError("alpha must lie in (0, 1]")

    def with_k(self, k):
        return FilterSpec(self.kind, self.gamma, k, self.alpha)


@dataclass(frozen=True)
class SparseOperator:
    """Square CSR matrix applied through the accelerated kernel."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    n: int

    def apply(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] != self.n:
            raise GraphError(f"operator is {self.n}x{self.n}, got {X.shape[0]} rows")
        if X.ndim == 1:
            return _kernels.csr_matmat(self.indptr, self.indices, self.data, X[:, None])[:, 0]
        return _kernels.csr_matmat(self.indptr, self.indices, self.data, np.ascontiguousarray(X))

    def transpose(self):
        T = self.to_scipy().T.tocsr()
        T.sort_indices()
        return SparseOperator(T.indptr.astype(np.int64), T.indices.astype(np.int64), T.data, self.n)

    def to_scipy(self):
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def to_dense(self):
        return self.to_scipy().toarray()


def _augmented_csr(g, gamma):
    """CSR of A + gamma*I with the diagonal merged in row order."""
    n = g.n
    rows = np.repeat(np.arange(n), np.diff(g.indptr))
    cols = g.indices
    vals = np.ones(cols.shape[0])
    if gamma > 0:
        rows = np.concatenate([rows, np.arange(n)])
        cols = np.concatenate([cols, np.arange(n)])
        vals = np.concatenate([vals, np.full(n, float(gamma))])
    M = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    M.sort_indices()
    return M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data, rows, cols


def operator(g, spec):
    """Build the sparse propagation matrix named by ``spec`` (k is ignored)."""
    if spec.kind == "bilateral":
        if g.has_isolated():
            raise GraphError("bilateral operator needs D^-1/2; graph has an isolated vertex")
        indptr, indices, _, _, _ = _augmented_csr(g, 0.0)
        rows = np.repeat(np.arange(g.n), np.diff(indptr))
        inv = 1.0 / np.sqrt(g.degree)
        data = spec.alpha * inv[rows] * inv[indices]
        return SparseOperator(_frozen(indptr), _frozen(indices), _frozen(data), g.n)

    dt = augmented_degrees(g, spec.gamma).dtilde
    if np.any(dt == 0):
        raise GraphError("isolated vertex with gamma=0: degree matrix is singular")
    indptr, indices, vals, _, _ = _augmented_csr(g, spec.gamma)
    rows = np.repeat(np.arange(g.n), np.diff(indptr))
    if spec.kind == "leftnorm":
        data = vals / dt[rows]
    else:
        data = vals / np.sqrt(dt[rows] * dt[indices])
    return SparseOperator(_frozen(indptr), _frozen(indices), _frozen(data), g.n)


def operator_apply(g, spec, X):
    """One sparse product ``M X`` with ``M`` the operator named by ``spec``."""
    X = _check_rows(g, X)
    return operator(g, spec).apply(X)


# ---------------------------------------------------------------------------
# Small fixture graphs
# ---------------------------------------------------------------------------

def path_graph(n):
    return build_graph([(i, i + 1) for i in range(n - 1)], n)


def complete_graph(n):
    return build_graph([(i, j) for i in range(n) for j in range(i + 1, n)], n)


def erdos_renyi(n, p, seed, connect_isolated=False):
    """G(n, p) sample.

    With ``connect_isolated`` every isolated vertex is joined to a uniformly
    chosen other vertex, which keeps ``gamma = 0`` operators well defined.
    """
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    if connect_isolated and n > 1:
        deg = np.bincount(edges.ravel(), minlength=n)
        extra = []
        for v in np.flatnonzero(deg == 0):
            w = int(rng.integers(n - 1))
            extra.append((v, w if w < v else w + 1))
        if extra:
            edges = np.concatenate([edges, np.asarray(extra, dtype=np.int64)], axis=0)
    return build_graph(edges, n)

"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a ``*_numba`` version decorated with ``@njit`` and a
``*_numpy`` version written with vectorized numpy/scipy.  The un-suffixed name
is bound to one of them at import time:

* ``GFNN_DISABLE_NUMBA=1`` forces the numpy path;
* a missing numba install falls back to numpy silently.

Both paths take and return the same arrays and are checked against each other
in the test-suite, so callers never need to know which one is active.
"""

import os

import numpy as np
import scipy.sparse as sp

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def decorator(func):
            return func

        return decorator


def _env_disabled():
    return os.environ.get("GFNN_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")


USE_NUMBA = NUMBA_AVAILABLE and not _env_disabled()
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# CSR sparse x dense product
# ---------------------------------------------------------------------------

@njit(cache=True)
def csr_matmat_numba(indptr, indices, data, X):
    n = indptr.shape[0] - 1
    d = X.shape[1]
    out = np.zeros((n, d))
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            w = data[p]
            for c in range(d):
                out[i, c] += w * X[j, c]
    return out


def csr_matmat_numpy(indptr, indices, data, X):
    n = indptr.shape[0] - 1
    M = sp.csr_matrix((data, indices, indptr), shape=(n, X.shape[0]))
    return np.asarray(M @ X)


# ---------------------------------------------------------------------------
# Brute-force k nearest neighbours (ties broken by lower index)
# ---------------------------------------------------------------------------

@njit(cache=True)
def knn_numba(points, k):
    # insertion into a sorted top-k list; a later index only displaces on a
    # strictly smaller distance, which keeps the lower index on ties
    n, dim = points.shape
    out = np.empty((n, k), dtype=np.int64)
    best_d = np.empty(k)
    best_i = np.empty(k, dtype=np.int64)
    for i in range(n):
        filled = 0
        for j in range(n):
            if j == i:
                continue
            s = 0.0
            for c in range(dim):
                t = points[i, c] - points[j, c]
                s += t * t
            if filled == k and s >= best_d[k - 1]:
                continue
            pos = filled if filled < k else k - 1
            while pos > 0 and best_d[pos - 1] > s:
                if pos < k:
                    best_d[pos] = best_d[pos - 1]
                    best_i[pos] = best_i[pos - 1]
                pos -= 1
            best_d[pos] = s
            best_i[pos] = j
            if filled < k:
                filled += 1
        for q in range(k):
            out[i, q] = best_i[q]
    return out


def knn_numpy(points, k, chunk=256):
    n, dim = points.shape
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = points[start:stop, None, :] - points[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        dist[np.arange(stop - start), np.arange(start, stop)] = np.inf
        out[start:stop] = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return out


# ---------------------------------------------------------------------------
# Lazy random walks on the gamma-augmented graph
# ---------------------------------------------------------------------------

@njit(cache=True)
def walk_returns_numba(indptr, indices, gamma, starts, uniforms):
    """Count walks that end where they started.

    ``uniforms`` has one row per walk and one column per step; a step from
    vertex v stays put when ``u * (deg(v) + gamma) < gamma`` and otherwise moves
    to the neighbour selected by the remaining mass.
    """
    walks, steps = uniforms.shape
    hits = 0
    for w in range(walks):
        v = starts[w]
        for s in range(steps):
            deg = indptr[v + 1] - indptr[v]
            r = uniforms[w, s] * (deg + gamma)
            if r >= gamma:
                q = int(r - gamma)
                if q >= deg:
                    q = deg - 1
                v = indices[indptr[v] + q]
        if v == starts[w]:
            hits += 1
    return hits


def walk_returns_numpy(indptr, indices, gamma, starts, uniforms):
    if indices.size == 0:
        return int(starts.size)
    v = starts.copy()
    deg_all = np.diff(indptr)
    last = indices.size - 1
    for s in range(uniforms.shape[1]):
        deg = deg_all[v]
        r = uniforms[:, s] * (deg + gamma)
        move = r >= gamma
        q = np.minimum((r - gamma).astype(np.int64), deg - 1)
        pos = np.minimum(indptr[v] + np.where(move, q, 0), last)
        v = np.where(move, indices[pos], v)
    return int(np.count_nonzero(v == starts))


if USE_NUMBA:
    csr_matmat = csr_matmat_numba
    knn = knn_numba
    walk_returns = walk_returns_numba
else:
    csr_matmat = csr_matmat_numpy
    knn = knn_numpy
    walk_returns = walk_returns_numpy

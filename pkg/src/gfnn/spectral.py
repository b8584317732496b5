"""Graph Fourier analysis on the generalized eigenproblem ``L u = lambda D~ u``.

The basis vectors are D~-orthonormal, so the forward transform is
``U^T D~ X`` and the inverse is plain ``U Xhat``.
"""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import GraphError, augmented_degrees

DENSE_LIMIT = 4000


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Generalized eigenpairs sorted by ascending frequency.

    ``U`` may hold fewer than ``n`` columns when computed in partial mode.
    """

    gamma: float
    lambdas: np.ndarray
    U: np.ndarray
    dtilde: np.ndarray

    @property
    def n(self):
        return self.U.shape[0]

    @property
    def size(self):
        return self.U.shape[1]


@dataclass(frozen=True)
class FrequencyProfile:
    lambdas: np.ndarray
    energy: np.ndarray
    cumulative_fraction: np.ndarray
    cutoff: float


def _fix_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def eigenbasis(g, gamma=1.0, k=None):
    """Generalized eigenbasis of ``(L, D + gamma I)``.

    ``k=None`` decomposes the dense normalized matrix ``D~^-1/2 L D~^-1/2``
    and returns all ``n`` pairs.  An integer ``k`` returns the ``k`` lowest
    pairs from a Lanczos run (ARPACK) on ``D~^-1/2 A~ D~^-1/2``.
    """
    dt = np.asarray(augmented_degrees(g, gamma).dtilde)
    if np.any(dt == 0):
        raise GraphError("isolated vertex with gamma=0: D~ is singular")
    n = g.n
    if k is not None and not (1 <= k <= n):
        raise GraphError(f"k must lie in [1, {n}], got {k}")
    inv_sqrt = 1.0 / np.sqrt(dt)

    if k is None or k >= n - 1:
        S = g.laplacian().toarray()
        S *= inv_sqrt[:, None]
        S *= inv_sqrt[None, :]
        lam, V = sla.eigh(S)
        if k is not None:
            lam, V = lam[:k], V[:, :k]
    else:
        A_aug = g.adjacency() + gamma * sp.identity(n, format="csr")
        Ahat = sp.diags(inv_sqrt) @ A_aug @ sp.diags(inv_sqrt)
        v0 = np.random.default_rng(0).standard_normal(n)
        mu, V = spla.eigsh(Ahat, k=k, which="LA", v0=v0, tol=1e-12)
        order = np.argsort(-mu, kind="stable")
        lam, V = 1.0 - mu[order], V[:, order]

    lam = np.where(np.abs(lam) < 1e-12, 0.0, lam)
    U = _fix_signs(V * inv_sqrt[:, None])
    U.flags.writeable = False
    lam.flags.writeable = False
    dt.flags.writeable = False
    return SpectralBasis(float(gamma), lam, U, dt)


def _rows(basis, X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != basis.n:
        raise GraphError(f"expected {basis.n} rows, got {X.shape[0]}")
    return X


def gft(basis, X):
    X = _rows(basis, X)
    if X.ndim == 1:
        return basis.U.T @ (basis.dtilde * X)
    return basis.U.T @ (basis.dtilde[:, None] * X)


def igft(basis, Xhat):
    Xhat = np.asarray(Xhat, dtype=np.float64)
    m = Xhat.shape[0]
    if m > basis.size:
        raise GraphError(f"expected at most {basis.size} frequency rows, got {m}")
    return basis.U[:, :m] @ Xhat


def truncate_reconstruct(basis, X, k):
    """Keep only the ``k`` lowest frequency components of ``X``."""
    if not (1 <= k <= basis.size):
        raise GraphError(f"k must lie in [1, {basis.size}], got {k}")
    X = _rows(basis, X)
    Uk = basis.U[:, :k]
    if X.ndim == 1:
        return Uk @ (Uk.T @ (basis.dtilde * X))
    return Uk @ (Uk.T @ (basis.dtilde[:, None] * X))


def spectral_filter_apply(basis, X, h, symmetric=False):
    """Filter ``X`` by the frequency response ``h``.

    With ``symmetric`` the result is ``D~^1/2 h(L_rw) D~^-1/2 X``, the
    response of the same filter written on the symmetric normalized
    Laplacian.  Needs a full basis.
    """
    if basis.size != basis.n:
        raise GraphError("spectral filtering needs the full basis")
    X = _rows(basis, X)
    vec = X.ndim == 1
    if vec:
        X = X[:, None]
    s = np.sqrt(basis.dtilde)[:, None]
    if symmetric:
        X = X / s
    resp = np.asarray(h(basis.lambdas), dtype=np.float64)
    Y = igft(basis, resp[:, None] * gft(basis, X))
    if symmetric:
        Y = Y * s
    return Y[:, 0] if vec else Y


def frequency_profile(basis, X, tau=0.01):
    """Per-frequency energy and the cut-off holding ``1 - tau`` of it."""
    Xhat = gft(basis, X)
    energy = Xhat ** 2 if Xhat.ndim == 1 else np.sum(Xhat ** 2, axis=1)
    total = energy.sum()
    if total > 0:
        cum = np.cumsum(energy) / total
        idx = int(np.searchsorted(cum, 1.0 - tau - 1e-12))
        cutoff = float(basis.lambdas[min(idx, basis.size - 1)])
    else:
        cum = np.ones_like(energy)
        cutoff = float(basis.lambdas[0])
    return FrequencyProfile(basis.lambdas, energy, cum, cutoff)


def write_profile_csv(path, profile):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "lambda", "energy"])
        for i, (lam, e) in enumerate(zip(profile.lambdas, profile.energy)):
            w.writerow([i, repr(float(lam)), repr(float(e))])

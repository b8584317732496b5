"""Low-pass propagation, Laplacian-regularized denoising and return probabilities."""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .graph import FilterSpec, GraphError, augmented_degrees, operator
from .spectral import DENSE_LIMIT

__all__ = [
    "FilterSpec",
    "propagate_k",
    "lrls_denoise",
    "return_probability",
    "ReturnEstimate",
    "optimal_k_estimate",
    "frequency_response",
]


def propagate_k(g, spec, X):
    """Apply the operator ``spec.k`` times; ``M^k`` is never formed."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != g.n:
        raise GraphError(f"signal has {X.shape[0]} rows, graph has {g.n} vertices")
    if spec.k == 0:
        return X.copy()
    M = operator(g, spec)
    for _ in range(spec.k):
        X = M.apply(X)
    return X


def frequency_response(spec):
    """Spectral description of one application of ``spec``'s operator.

    Returns ``(h, gamma, symmetric)``: the response as a function of the
    generalized eigenvalue, the augmentation of the basis it lives on, and
    whether the operator is the D~^1/2-similar symmetric form.
    """
    if spec.kind == "leftnorm":
        return (lambda lam: 1.0 - lam), spec.gamma, False
    if spec.kind == "augnorm":
        return (lambda lam: 1.0 - lam), spec.gamma, True
    alpha = spec.alpha
    return (lambda lam: alpha * (1.0 - lam)), 0.0, True


def lrls_denoise(g, gamma, X, tol=1e-10):
    """Solve ``(I + L_rw~) Xbar = X`` exactly.

    Multiplying through by ``D~`` gives the symmetric positive definite
    system ``(D~ + L) Xbar = D~ X``, solved densely up to 4000 vertices and
    by conjugate gradients beyond.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != g.n:
        raise GraphError(f"signal has {X.shape[0]} rows, graph has {g.n} vertices")
    dt = np.asarray(augmented_degrees(g, gamma).dtilde)
    if np.any(dt == 0):
        raise GraphError("isolated vertex with gamma=0: L_rw is undefined")
    vec = X.ndim == 1
    B = (dt[:, None] * (X[:, None] if vec else X))
    K = sp.diags(dt) + g.laplacian()
    if g.n <= DENSE_LIMIT:
        out = sla.solve(K.toarray(), B, assume_a="pos")
    else:
        Minv = sp.diags(1.0 / (dt + g.degree))
        out = np.empty_like(B)
        for c in range(B.shape[1]):
            sol, info = spla.cg(K, B[:, c], rtol=tol, atol=0.0, M=Minv, maxiter=10 * g.n)
            if info != 0:
                raise RuntimeError(f"conjugate gradients did not converge (info={info})")
            out[:, c] = sol
    return out[:, 0] if vec else out


@dataclass(frozen=True)
class ReturnEstimate:
    value: float
    stderr: float = 0.0
    walks: int = 0


def return_probability(g, gamma, k, method="exact", walks=100_000, seed=0, basis=None):
    """Probability that a 2k-step lazy walk on the augmented graph returns home.

    ``method="exact"`` gives ``tr(A_rw~^(2k)) / n`` (through ``basis`` when one
    is supplied, otherwise by propagating indicator vectors).
    ``method="montecarlo"`` simulates ``walks`` walks with uniform starts and
    reports the binomial standard error alongside.
    """
    if k < 0:
        raise GraphError("k must be non-negative")
    dt = np.asarray(augmented_degrees(g, gamma).dtilde)
    if np.any(dt == 0):
        raise GraphError("isolated vertex with gamma=0: random walk undefined")
    if k == 0:
        return ReturnEstimate(1.0)

    if method == "exact":
        if basis is not None and basis.size == basis.n and basis.gamma == gamma:
            val = float(np.sum((1.0 - basis.lambdas) ** (2 * k)) / g.n)
        else:
            M = operator(g, FilterSpec("leftnorm", gamma, 1))
            tr = 0.0
            block = 512
            for start in range(0, g.n, block):
                stop = min(start + block, g.n)
                E = np.zeros((g.n, stop - start))
                E[np.arange(start, stop), np.arange(stop - start)] = 1.0
                for _ in range(2 * k):
                    E = M.apply(E)
                tr += float(np.trace(E[start:stop]))
            val = tr / g.n
        return ReturnEstimate(val)

    if method == "montecarlo":
        if walks < 1:
            raise GraphError("walks must be at least 1")
        rng = np.random.default_rng(seed)
        starts = rng.integers(0, g.n, size=walks).astype(np.int64)
        uniforms = rng.random((walks, 2 * k))
        hits = _kernels.walk_returns(
            np.asarray(g.indptr), np.asarray(g.indices), float(gamma), starts, uniforms
        )
        p = hits / walks
        return ReturnEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / walks), walks)

    raise GraphError(f"unknown method {method!r}")


def optimal_k_estimate(epsilon, rho, delta):
    """Propagation depth balancing filter bias against residual noise.

    ``max(1, ceil(log(log(1/delta) * rho / epsilon)))``; the hidden
    constant of the asymptotic rate is taken as 1.
    """
    if not (0 < epsilon < 1):
        raise GraphError("epsilon must lie in (0, 1)")
    if rho <= 0:
        raise GraphError("rho must be positive")
    if not (0 < delta < 0.5):
        raise GraphError("delta must lie in (0, 1/2)")
    arg = math.log(1.0 / delta) * rho / epsilon
    if arg <= 1.0:
        return 1
    return max(1, math.ceil(math.log(arg)))

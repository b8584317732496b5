"""Datasets: on-disk layout, synthetic generators, noise and splits.

A dataset directory holds five files::

    meta.json      {"name": str, "n": int, "d": int, "c": int}
    edges.tsv      u<TAB>v per line, 0-based, u < v, sorted, unique
    features.csv   n lines of d comma-separated floats
    labels.txt     n lines, one integer class id each
    splits.json    {"train": [...], "val": [...], "test": [...]}
"""

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .graph import GraphError, build_graph
from .spectral import igft

SPLITS = ("train", "val", "test")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    graph: object
    X: np.ndarray
    labels: np.ndarray
    splits: dict
    name: str
    c: int

    def __post_init__(self):
        n = self.graph.n
        if self.X.ndim != 2 or self.X.shape[0] != n:
            raise DatasetError(f"feature matrix shape {self.X.shape} does not match n={n}")
        if self.labels.shape != (n,):
            raise DatasetError(f"expected {n} labels, got {self.labels.shape[0]}")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.c):
            raise DatasetError(f"labels must lie in [0, {self.c})")
        seen = set()
        for s in SPLITS:
            idx = np.asarray(self.splits.get(s, []), dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise DatasetError(f"{s} split has out-of-range vertex ids")
            ids = set(idx.tolist())
            if len(ids) != idx.size:
                raise DatasetError(f"{s} split contains duplicates")
            if seen & ids:
                raise DatasetError(f"{s} split overlaps an earlier split")
            seen |= ids

    @property
    def n(self):
        return self.graph.n

    @property
    def d(self):
        return self.X.shape[1]

    def with_features(self, X):
        return replace(self, X=np.asarray(X, dtype=np.float64))


def _split_dict(splits):
    return {s: np.asarray(splits.get(s, []), dtype=np.int64) for s in SPLITS}


def make_dataset(graph, X, labels, splits, name, c=None):
    labels = np.asarray(labels, dtype=np.int64)
    if c is None:
        c = int(labels.max()) + 1 if labels.size else 0
    return Dataset(graph, np.asarray(X, dtype=np.float64), labels, _split_dict(splits), name, int(c))


def save_dataset(ds, dir_path):
    p = Path(dir_path)
    p.mkdir(parents=True, exist_ok=True)
    meta = {"name": ds.name, "n": ds.n, "d": ds.d, "c": ds.c}
    (p / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    with open(p / "edges.tsv", "w") as fh:
        for u, v in ds.graph.edges:
            fh.write(f"{u}\t{v}\n")
    with open(p / "features.csv", "w") as fh:
        for row in ds.X:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    with open(p / "labels.txt", "w") as fh:
        for y in ds.labels:
            fh.write(f"{int(y)}\n")
    splits = {s: [int(i) for i in ds.splits[s]] for s in SPLITS}
    (p / "splits.json").write_text(json.dumps(splits) + "\n")


def load_dataset(dir_path):
    """Read and validate a dataset directory."""
    p = Path(dir_path)
    for fname in ("meta.json", "edges.tsv", "features.csv", "labels.txt", "splits.json"):
        if not (p / fname).is_file():
            raise DatasetError(f"missing {fname} in {p}")
    meta = json.loads((p / "meta.json").read_text())
    n, d, c = int(meta["n"]), int(meta["d"]), int(meta["c"])

    edges = []
    with open(p / "edges.tsv") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DatasetError(f"edges.tsv:{lineno}: expected two tab-separated ids")
            u, v = int(parts[0]), int(parts[1])
            if u >= v:
                raise DatasetError(f"edges.tsv:{lineno}: expected u < v")
            edges.append((u, v))
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.shape[0] > 1:
        order = np.lexsort((e[:, 1], e[:, 0]))
        if not np.array_equal(order, np.arange(e.shape[0])):
            raise DatasetError("edges.tsv is not sorted")
        if np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise DatasetError("edges.tsv has duplicate edges")
    try:
        graph = build_graph(e, n)
    except GraphError as exc:
        raise DatasetError(f"edges.tsv: {exc}") from None

    X = np.loadtxt(p / "features.csv", delimiter=",", dtype=np.float64, ndmin=2)
    if X.shape != (n, d):
        raise DatasetError(f"features.csv has shape {X.shape}, meta says ({n}, {d})")
    labels = np.loadtxt(p / "labels.txt", dtype=np.int64, ndmin=1)
    splits = json.loads((p / "splits.json").read_text())
    try:
        return make_dataset(graph, X, labels, splits, meta["name"], c)
    except DatasetError as exc:
        raise DatasetError(f"{p}: {exc}") from None


def resolve_dataset_path(path):
    """Return ``path`` if it exists, else try it under ``$GFNN_DATA_DIR``."""
    p = Path(path)
    if p.is_dir():
        return p
    root = os.environ.get("GFNN_DATA_DIR")
    if root and (Path(root) / path).is_dir():
        return Path(root) / path
    raise DatasetError(f"dataset directory {path!r} not found")


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def two_circles(n, noise_sd=0.05, seed=0, radii=(1.0, 0.5)):
    """Two concentric circles, ``n/2`` points each, with Gaussian jitter.

    Label 0 is the outer circle, label 1 the inner one.
    """
    if n % 2:
        raise DatasetError("two_circles needs an even n")
    rng = np.random.default_rng(seed)
    half = n // 2
    theta = rng.uniform(0.0, 2 * np.pi, size=n)
    r = np.repeat(np.asarray(radii, dtype=np.float64), half)
    pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    if noise_sd > 0:
        pts = pts + rng.normal(0.0, noise_sd, size=pts.shape)
    labels = np.repeat([0, 1], half)
    return pts, labels


def knn_graph(points, k):
    """Union-symmetrized k-nearest-neighbour graph (Euclidean, ties by index)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    if k < 1 or k >= n:
        raise DatasetError(f"k must lie in [1, {n - 1}], got {k}")
    nbrs = _kernels.knn(points, int(k))
    src = np.repeat(np.arange(n), k)
    return build_graph(np.stack([src, nbrs.ravel()], axis=1), n)


def two_circles_dataset(n=4000, k=5, noise_sd=0.05, seed=0, split_sizes=(80, 80), split_seed=0):
    pts, labels = two_circles(n, noise_sd, seed)
    g = knn_graph(pts, k)
    ds = make_dataset(g, pts, labels, {}, f"two_circles_{n}", 2)
    rest = n - sum(split_sizes)
    return random_split(ds, (split_sizes[0], split_sizes[1], rest), split_seed)


def planted_partition(n=1000, c=4, d=200, p_in=0.02, p_out=0.001, active=20,
                      signal=0.6, seed=0, split_sizes=(80, 300, 500)):
    """Citation-like synthetic benchmark.

    Vertices are split into ``c`` equal blocks with edge probabilities
    ``p_in``/``p_out``.  Each vertex gets ``active`` binary features; a
    ``signal`` fraction of them is drawn from its class's vocabulary slice
    and the rest uniformly from all ``d`` words, then rows are scaled to sum 1.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % c
    rng.shuffle(labels)
    iu, ju = np.triu_indices(n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, p_in, p_out)
    keep = rng.random(iu.shape[0]) < prob
    g = build_graph(np.stack([iu[keep], ju[keep]], axis=1), n)

    X = np.zeros((n, d))
    vocab = d // c
    for i in range(n):
        n_sig = rng.binomial(active, signal)
        own = labels[i] * vocab + rng.integers(0, vocab, size=n_sig)
        other = rng.integers(0, d, size=active - n_sig)
        X[i, own] = 1.0
        X[i, other] = 1.0
    X /= np.maximum(X.sum(axis=1, keepdims=True), 1.0)
    ds = make_dataset(g, X, labels, {}, "planted_partition", c)
    rest = min(split_sizes[2], n - split_sizes[0] - split_sizes[1])
    return random_split(ds, (split_sizes[0], split_sizes[1], rest), seed)


# ---------------------------------------------------------------------------
# Noise and splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0
    domain: str = "feature"

    def __post_init__(self):
        if self.sigma < 0:
            raise DatasetError("sigma must be non-negative")
        if self.domain not in ("feature", "frequency"):
            raise DatasetError("domain must be 'feature' or 'frequency'")


def add_noise(X, spec, basis=None):
    """Add white Gaussian noise in feature space or in the graph-frequency domain.

    Frequency-domain noise draws i.i.d. Fourier coefficients and maps them
    back with ``basis``, so its D~-norm has expectation ``sigma^2 n d``.
    """
    X = np.asarray(X, dtype=np.float64)
    if spec.sigma == 0:
        return X.copy()
    rng = np.random.default_rng(spec.seed)
    if spec.domain == "feature":
        return X + rng.normal(0.0, spec.sigma, size=X.shape)
    if basis is None:
        raise DatasetError("frequency-domain noise needs a spectral basis")
    Zhat = rng.normal(0.0, spec.sigma, size=(basis.size,) + X.shape[1:])
    return X + igft(basis, Zhat)


def random_split(ds, sizes, seed):
    """Uniformly random disjoint train/val/test index sets."""
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) != 3 or min(sizes) < 0:
        raise DatasetError("sizes must be three non-negative counts")
    if sum(sizes) > ds.n:
        raise DatasetError(f"split sizes {sizes} exceed n={ds.n}")
    perm = np.random.default_rng(seed).permutation(ds.n)
    a, b, c = sizes
    splits = {
        "train": np.sort(perm[:a]),
        "val": np.sort(perm[a:a + b]),
        "test": np.sort(perm[a + b:a + b + c]),
    }
    return replace(ds, splits=splits)


def split_sizes(ds):
    return tuple(len(ds.splits[s]) for s in SPLITS)

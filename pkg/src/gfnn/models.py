"""Dense two-layer and one-layer classifiers with hand-written backprop.

Five model kinds share one forward/backward core:

* ``mlp``  -- softmax(relu(X W1 + b1) W2 + b2)
* ``lr``   -- softmax(X W2 + b2)
* ``gfnn`` -- ``mlp`` on features filtered once with a :class:`FilterSpec`
* ``sgc``  -- ``lr`` on features propagated twice with D~^-1 A~
* ``gcn``  -- softmax(P relu(P X W1 + b1) W2 + b2)

Graph filtering for ``gfnn``/``sgc`` happens once in :func:`prepare`; only
``gcn`` touches the graph inside the training loop.
"""

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .filters import propagate_k
from .graph import FilterSpec, GraphError, operator

MODEL_NAMES = ("mlp", "lr", "gcn", "sgc", "gfnn")
TWO_LAYER = ("mlp", "gcn", "gfnn")


@dataclass
class ModelParams:
    W2: np.ndarray
    W1: np.ndarray = None
    b1: np.ndarray = None
    b2: np.ndarray = None

    def items(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                yield f.name, v

    def copy(self):
        return ModelParams(**{k: v.copy() for k, v in self.items()})

    def to_json(self):
        arrays = {k: {"shape": list(v.shape), "data": [float(x) for x in v.ravel()]} for k, v in self.items()}
        return json.dumps({"format": "gfnn-params", "version": 1, "arrays": arrays}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        if obj.get("format") != "gfnn-params":
            raise ValueError("not a gfnn parameter container")
        kw = {k: np.asarray(a["data"], dtype=np.float64).reshape(a["shape"]) for k, a in obj["arrays"].items()}
        return cls(**kw)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.2
    epochs: int = 50
    hidden: int = 32
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.0
    bias: bool = True

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.hidden < 1:
            raise ValueError("hidden must be at least 1")


@dataclass(frozen=True)
class ModelKind:
    """Model name plus the propagation settings it uses.

    ``filter`` is the full filter for ``gfnn``; ``sgc`` and ``gcn`` only read
    its ``gamma``.  ``gcn_norm`` picks D~^-1 A~ (``rw``) or the symmetric
    D~^-1/2 A~ D~^-1/2 (``sym``) for GCN.
    """

    name: str
    filter: FilterSpec = field(default_factory=FilterSpec)
    gcn_norm: str = "rw"

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.name!r}; expected one of {MODEL_NAMES}")
        if self.gcn_norm not in ("rw", "sym"):
            raise ValueError("gcn_norm must be 'rw' or 'sym'")

    @property
    def label(self):
        if self.name == "gfnn":
            return f"gfnn[{self.filter.kind}]"
        return self.name


def as_kind(kind):
    return kind if isinstance(kind, ModelKind) else ModelKind(str(kind))


@dataclass(frozen=True, eq=False)
class Prepared:
    """Model inputs after any one-off graph filtering."""

    kind: ModelKind
    features: np.ndarray
    op: object = None
    opT: object = None


def prepare(kind, g, X):
    kind = as_kind(kind)
    X = np.asarray(X, dtype=np.float64)
    if g is not None and X.shape[0] != g.n:
        raise GraphError(f"feature matrix has {X.shape[0]} rows, graph has {g.n} vertices")
    name = kind.name
    if name in ("mlp", "lr"):
        return Prepared(kind, X)
    if g is None:
        raise GraphError(f"model {name} needs a graph")
    gamma = kind.filter.gamma
    if name == "sgc":
        return Prepared(kind, propagate_k(g, FilterSpec("leftnorm", gamma, 2), X))
    if name == "gfnn":
        return Prepared(kind, propagate_k(g, kind.filter, X))
    spec = FilterSpec("leftnorm" if kind.gcn_norm == "rw" else "augnorm", gamma, 1)
    op = operator(g, spec)
    return Prepared(kind, op.apply(X), op, op.transpose())


def init_params(d, h, c, seed, two_layer=True, bias=True):
    """Glorot-uniform weights and zero biases, deterministic in ``seed``."""
    if min(d, c) < 1 or (two_layer and h < 1):
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(seed)

    def glorot(fan_in, fan_out):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=(fan_in, fan_out))

    if two_layer:
        W1 = glorot(d, h)
        W2 = glorot(h, c)
        if bias:
            return ModelParams(W2=W2, W1=W1, b1=np.zeros(h), b2=np.zeros(c))
        return ModelParams(W2=W2, W1=W1)
    W2 = glorot(d, c)
    return ModelParams(W2=W2, b2=np.zeros(c) if bias else None)


def softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def relu(Z):
    return np.maximum(Z, 0.0)


def _forward(prep, params):
    name = prep.kind.name
    F = prep.features
    if name in TWO_LAYER:
        if params.W1 is None:
            raise ValueError(f"model {name} needs W1")
        if F.shape[1] != params.W1.shape[0] or params.W1.shape[1] != params.W2.shape[0]:
            raise ValueError("parameter shapes do not match features")
        Z1 = F @ params.W1
        if params.b1 is not None:
            Z1 = Z1 + params.b1
        H = relu(Z1)
        T = H @ params.W2
        if prep.op is not None:
            T = prep.op.apply(T)
        cache = (Z1, H)
    else:
        if F.shape[1] != params.W2.shape[0]:
            raise ValueError("parameter shapes do not match features")
        T = F @ params.W2
        cache = None
    if params.b2 is not None:
        T = T + params.b2
    return T, cache


def logits(prep, params):
    return _forward(prep, params)[0]


def predict_proba(prep, params):
    return softmax(logits(prep, params))


def mlp_forward(X, params):
    return predict_proba(prepare("mlp", None, X), params)


def gcn_forward(g, gamma, X, params, norm="rw"):
    kind = ModelKind("gcn", FilterSpec("leftnorm", gamma, 1), gcn_norm=norm)
    return predict_proba(prepare(kind, g, X), params)


def sgc_forward(g, gamma, X, params):
    return predict_proba(prepare(ModelKind("sgc", FilterSpec("leftnorm", gamma, 2)), g, X), params)


def gfnn_forward(g, spec, X, params):
    return predict_proba(prepare(ModelKind("gfnn", spec), g, X), params)


def loss_and_grads(prep, params, labels, mask, weight_decay=0.0):
    """Mean masked cross-entropy and its exact gradient.

    ``mask`` is an index array (or boolean mask) of labelled rows.
    """
    idx = np.flatnonzero(mask) if np.asarray(mask).dtype == bool else np.asarray(mask, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty training mask")
    labels = np.asarray(labels)
    Z2, cache = _forward(prep, params)
    Zm = Z2[idx]
    Zm = Zm - Zm.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(Zm).sum(axis=1))
    ym = labels[idx]
    loss = float(np.mean(logsum - Zm[np.arange(idx.size), ym]))

    G2 = np.zeros_like(Z2)
    P = np.exp(Zm - logsum[:, None])
    P[np.arange(idx.size), ym] -= 1.0
    G2[idx] = P / idx.size

    grads = {}
    if params.b2 is not None:
        grads["b2"] = G2.sum(axis=0)
    if prep.kind.name in TWO_LAYER:
        Z1, H = cache
        dT = prep.opT.apply(G2) if prep.opT is not None else G2
        grads["W2"] = H.T @ dT
        dZ1 = (dT @ params.W2.T) * (Z1 > 0)
        grads["W1"] = prep.features.T @ dZ1
        if params.b1 is not None:
            grads["b1"] = dZ1.sum(axis=0)
    else:
        grads["W2"] = prep.features.T @ G2

    if weight_decay:
        for name in ("W1", "W2"):
            W = getattr(params, name)
            if W is not None:
                loss += 0.5 * weight_decay * float(np.sum(W * W))
                grads[name] = grads[name] + weight_decay * W
    return loss, ModelParams(**grads)


@dataclass
class AdamState:
    step: int
    m: dict
    v: dict


def adam_init(params):
    return AdamState(0, {k: np.zeros_like(v) for k, v in params.items()},
                     {k: np.zeros_like(v) for k, v in params.items()})


def adam_step(params, grads, state, config):
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    t = state.step + 1
    new_p, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = getattr(grads, name)
        m = b1 * state.m[name] + (1 - b1) * g
        v = b2 * state.v[name] + (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        new_p[name] = p - config.lr * mhat / (np.sqrt(vhat) + eps)
        new_m[name], new_v[name] = m, v
    return ModelParams(**new_p), AdamState(t, new_m, new_v)


def accuracy(prep, params, labels, idx):
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty split")
    pred = np.argmax(logits(prep, params)[idx], axis=1)
    return float(np.mean(pred == np.asarray(labels)[idx]))


def fit(prep, labels, c, train_idx, config, val_idx=None):
    """Full-batch Adam on already prepared inputs; returns ``(params, history)``."""
    two = prep.kind.name in TWO_LAYER
    params = init_params(prep.features.shape[1], config.hidden, c, config.seed,
                         two_layer=two, bias=config.bias)
    state = adam_init(params)
    history = {"train_loss": [], "val_acc": []}
    for _ in range(config.epochs):
        loss, grads = loss_and_grads(prep, params, labels, train_idx, config.weight_decay)
        params, state = adam_step(params, grads, state, config)
        history["train_loss"].append(loss)
        if val_idx is not None and len(val_idx):
            history["val_acc"].append(accuracy(prep, params, labels, val_idx))
    return params, history


def train(kind, dataset, config, prepared=None):
    prep = prepared if prepared is not None else prepare(kind, dataset.graph, dataset.X)
    return fit(prep, dataset.labels, dataset.c, dataset.splits["train"], config,
               val_idx=dataset.splits.get("val"))


def evaluate(kind, dataset, params, split="test", prepared=None):
    if split not in ("train", "val", "test"):
        raise ValueError(f"unknown split {split!r}")
    prep = prepared if prepared is not None else prepare(kind, dataset.graph, dataset.X)
    return accuracy(prep, params, dataset.labels, dataset.splits[split])


def max_singular_value(W, tol=1e-8, max_iter=100_000):
    """Largest singular value by power iteration on ``W^T W``."""
    W = np.asarray(W, dtype=np.float64)
    if W.size == 0:
        return 0.0
    v = np.random.default_rng(0).standard_normal(W.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = W.T @ (W @ v)
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
        if abs(lam - prev) <= tol * tol * lam:
            break
        prev = lam
    return float(np.sqrt(lam))


__all__ = [
    "MODEL_NAMES", "ModelParams", "TrainConfig", "ModelKind", "Prepared", "prepare",
    "init_params", "softmax", "relu", "logits", "predict_proba", "mlp_forward",
    "gcn_forward", "sgc_forward", "gfnn_forward", "loss_and_grads", "AdamState",
    "adam_init", "adam_step", "accuracy", "fit", "train", "evaluate", "max_singular_value",
]

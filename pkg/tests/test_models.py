import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfnn.data import make_dataset
from gfnn.filters import propagate_k
from gfnn.graph import FilterSpec, build_graph, path_graph
from gfnn.models import (
    ModelKind,
    ModelParams,
    TrainConfig,
    adam_init,
    adam_step,
    evaluate,
    fit,
    gcn_forward,
    gfnn_forward,
    init_params,
    logits,
    loss_and_grads,
    max_singular_value,
    mlp_forward,
    predict_proba,
    prepare,
    relu,
    sgc_forward,
    softmax,
    train,
)

from conftest import random_graph

KINDS = [
    ModelKind("mlp"),
    ModelKind("lr"),
    ModelKind("gcn"),
    ModelKind("gcn", gcn_norm="sym"),
    ModelKind("sgc"),
    ModelKind("gfnn", FilterSpec("leftnorm", 1.0, 2)),
    ModelKind("gfnn", FilterSpec("augnorm", 1.0, 1)),
    ModelKind("gfnn", FilterSpec("bilateral", 1.0, 2, 0.8)),
]


def small_problem(seed=0, n=8, d=3, c=3):
    rng = np.random.default_rng(seed)
    g = random_graph(n, 0.4, seed, connected=True)
    X = rng.standard_normal((n, d))
    y = rng.integers(0, c, size=n)
    return g, X, y


def flat(params):
    return np.concatenate([v.ravel() for _, v in params.items()])


def unflat(template, vec):
    out, i = {}, 0
    for k, v in template.items():
        out[k] = vec[i:i + v.size].reshape(v.shape)
        i += v.size
    return ModelParams(**out)


@pytest.mark.parametrize("kind", KINDS, ids=lambda k: f"{k.label}-{k.gcn_norm}")
@pytest.mark.parametrize("bias", [True, False])
@pytest.mark.parametrize("wd", [0.0, 0.01])
def test_gradients_match_finite_differences(kind, bias, wd):
    g, X, y = small_problem(1)
    prep = prepare(kind, g, X)
    two = kind.name in ("mlp", "gcn", "gfnn")
    params = init_params(prep.features.shape[1], 4, 3, seed=3, two_layer=two, bias=bias)
    rng = np.random.default_rng(4)
    params = ModelParams(**{k: v + 0.3 * rng.standard_normal(v.shape) for k, v in params.items()})
    mask = np.array([0, 2, 3, 5, 7])
    _, grads = loss_and_grads(prep, params, y, mask, wd)
    theta = flat(params)
    num = np.zeros_like(theta)
    h = 1e-6
    for i in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[i] += h
        tm[i] -= h
        num[i] = (loss_and_grads(prep, unflat(params, tp), y, mask, wd)[0]
                  - loss_and_grads(prep, unflat(params, tm), y, mask, wd)[0]) / (2 * h)
    ana = flat(grads)
    assert np.linalg.norm(ana - num) <= 1e-4 * max(np.linalg.norm(num), 1e-12)


def test_boolean_mask_equals_index_mask():
    g, X, y = small_problem(2)
    prep = prepare("mlp", g, X)
    p = init_params(3, 4, 3, 0)
    mask = np.zeros(8, dtype=bool)
    mask[[1, 4, 6]] = True
    a = loss_and_grads(prep, p, y, mask)
    b = loss_and_grads(prep, p, y, np.array([1, 4, 6]))
    assert a[0] == b[0] and np.array_equal(a[1].W1, b[1].W1)
    with pytest.raises(ValueError):
        loss_and_grads(prep, p, y, np.array([], dtype=int))


def test_uniform_predictions_loss_is_log_c():
    X = np.random.default_rng(0).standard_normal((10, 4))
    prep = prepare("lr", None, X)
    p = ModelParams(W2=np.zeros((4, 5)))
    loss, _ = loss_and_grads(prep, p, np.arange(10) % 5, np.arange(10))
    assert loss == pytest.approx(np.log(5), rel=1e-12)


def test_gradient_vanishes_on_separable_toy():
    X = np.array([[1.0, 0.2], [0.8, -0.3], [-1.0, 0.1], [-0.7, -0.4]])
    y = np.array([0, 0, 1, 1])
    prep = prepare("lr", None, X)
    params, hist = fit(prep, y, 2, np.arange(4), TrainConfig(lr=0.2, epochs=10_000, bias=False))
    _, grads = loss_and_grads(prep, params, y, np.arange(4))
    assert np.linalg.norm(flat(grads)) <= 1e-6
    assert hist["train_loss"][-1] < hist["train_loss"][0]


def test_init_params():
    a, b = init_params(5, 7, 3, seed=1), init_params(5, 7, 3, seed=1)
    for (k, v), (_, w) in zip(a.items(), b.items()):
        assert np.array_equal(v, w)
    c = init_params(5, 7, 3, seed=2)
    assert not np.array_equal(a.W1, c.W1)
    assert np.all(np.abs(a.W1) <= np.sqrt(6 / 12))
    assert np.all(np.abs(a.W2) <= np.sqrt(6 / 10))
    assert np.array_equal(a.b1, np.zeros(7))
    lr = init_params(5, 7, 3, seed=1, two_layer=False, bias=False)
    assert lr.W1 is None and lr.b2 is None and lr.W2.shape == (5, 3)
    with pytest.raises(ValueError):
        init_params(0, 3, 2, 0)


def test_mlp_zero_weights_uniform():
    X = np.random.default_rng(0).standard_normal((6, 3))
    P = mlp_forward(X, ModelParams(W1=np.zeros((3, 4)), W2=np.zeros((4, 5))))
    assert np.allclose(P, 0.2, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(range(len(KINDS))))
def test_outputs_row_stochastic(seed, ki):
    kind = KINDS[ki]
    g, X, _ = small_problem(seed % 50)
    prep = prepare(kind, g, X)
    p = init_params(prep.features.shape[1], 4, 3, seed, two_layer=kind.name in ("mlp", "gcn", "gfnn"))
    P = predict_proba(prep, p)
    assert np.all(P > 0) and np.all(P < 1)
    assert np.allclose(P.sum(1), 1.0, atol=1e-12)
    # saturated logits still normalize
    big = predict_proba(prepare(kind, g, 50 * X), ModelParams(**{k: 20 * v for k, v in p.items()}))
    assert np.all(np.isfinite(big)) and np.allclose(big.sum(1), 1.0, atol=1e-10)


def test_mlp_shape_mismatch():
    with pytest.raises(ValueError):
        mlp_forward(np.ones((3, 2)), init_params(3, 4, 2, 0))
    with pytest.raises(ValueError):
        mlp_forward(np.ones((3, 3)), ModelParams(W2=np.ones((3, 2))))


def test_gcn_edgeless_equals_mlp():
    g = build_graph([], 6)
    X = np.random.default_rng(1).standard_normal((6, 3))
    p = init_params(3, 4, 2, 0)
    p.b1[:] = 0.1
    assert np.array_equal(gcn_forward(g, 1.0, X, p), mlp_forward(X, p))


def test_sgc_edgeless_is_logistic_regression():
    g = build_graph([], 5)
    X = np.random.default_rng(2).standard_normal((5, 3))
    p = init_params(3, 0, 2, 0, two_layer=False, bias=False)
    assert np.allclose(sgc_forward(g, 1.0, X, p), softmax(X @ p.W2), atol=1e-15)


def test_sgc_linear_and_matches_filtered_linear_map():
    g, X, _ = small_problem(3)
    p = init_params(3, 0, 3, 0, two_layer=False, bias=False)
    kind = ModelKind("sgc")
    z1 = logits(prepare(kind, g, X), p)
    z2 = logits(prepare(kind, g, 2.5 * X), p)
    assert np.allclose(z2, 2.5 * z1, atol=1e-12)
    ref = softmax(propagate_k(g, FilterSpec("leftnorm", 1.0, 2), X) @ p.W2)
    assert np.allclose(sgc_forward(g, 1.0, X, p), ref, atol=1e-14)


def test_gfnn_k0_is_mlp_and_uses_filter():
    g, X, _ = small_problem(4)
    p = init_params(3, 4, 3, 0)
    assert np.array_equal(gfnn_forward(g, FilterSpec(k=0), X, p), mlp_forward(X, p))
    spec = FilterSpec("augnorm", 0.5, 2)
    assert np.allclose(gfnn_forward(g, spec, X, p), mlp_forward(propagate_k(g, spec, X), p), atol=1e-15)


def test_gcn_matches_dense_definition():
    g, X, _ = small_problem(5)
    from conftest import dense_adjacency
    At = dense_adjacency(g) + np.eye(g.n)
    M = At / At.sum(1)[:, None]
    p = init_params(3, 4, 3, 2)
    ref = softmax(M @ relu(M @ X @ p.W1 + p.b1) @ p.W2 + p.b2)
    assert np.allclose(gcn_forward(g, 1.0, X, p), ref, atol=1e-14)


def test_adam_step_one_and_zero_gradient():
    cfg = TrainConfig(lr=0.2)
    p = ModelParams(W2=np.array([[1.0, -2.0], [0.5, 0.0]]))
    g = ModelParams(W2=np.array([[0.3, -4.0], [1e-3, 0.0]]))
    st0 = adam_init(p)
    p1, st1 = adam_step(p, g, st0, cfg)
    assert st1.step == 1
    assert np.allclose(p1.W2 - p.W2, -0.2 * g.W2 / (np.abs(g.W2) + 1e-8), atol=1e-15)
    z = ModelParams(W2=np.zeros((2, 2)))
    p2, _ = adam_step(p, z, adam_init(p), cfg)
    assert np.array_equal(p2.W2, p.W2)
    p3, st3 = adam_step(p, g, adam_init(p), cfg)
    assert np.array_equal(p3.W2, p1.W2) and np.array_equal(st3.m["W2"], st1.m["W2"])


def test_adam_matches_reference_over_steps():
    cfg = TrainConfig(lr=0.05)
    rng = np.random.default_rng(0)
    w = rng.standard_normal(4)
    p, s = ModelParams(W2=w.reshape(2, 2).copy()), None
    s = adam_init(p)
    m = v = np.zeros(4)
    for t in range(1, 6):
        g = rng.standard_normal(4)
        p, s = adam_step(p, ModelParams(W2=g.reshape(2, 2)), s, cfg)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w = w - 0.05 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    assert np.allclose(p.W2.ravel(), w, atol=1e-14)


def _fixture_dataset():
    g, X, y = small_problem(6, n=10, d=3, c=3)
    return make_dataset(g, X, y, {"train": [0, 1, 2, 3, 4], "val": [5, 6], "test": [7, 8, 9]}, "toy", 3)


def test_training_deterministic():
    ds = _fixture_dataset()
    cfg = TrainConfig(epochs=15, hidden=5, seed=3)
    for kind in KINDS:
        a, ha = train(kind, ds, cfg)
        b, hb = train(kind, ds, cfg)
        assert ha == hb
        for (_, v), (_, w) in zip(a.items(), b.items()):
            assert np.array_equal(v, w)
        assert len(ha["train_loss"]) == 15 and len(ha["val_acc"]) == 15


def test_evaluate_tie_rule_and_hand_count():
    n = 10
    g = build_graph([], n)
    labels = np.array([0, 1, 1, 0, 2, 2, 1, 0, 0, 1])
    # one-hot features reproduce chosen logits through an identity map
    Z = np.array([
        [2, 1, 0],   # pred 0, label 0  ok
        [0, 3, 1],   # pred 1, label 1  ok
        [1, 1, 0],   # tie -> 0, label 1 wrong
        [0, 0, 0],   # tie -> 0, label 0 ok
        [0, 1, 2],   # pred 2, label 2 ok
        [5, 0, 5],   # tie -> 0, label 2 wrong
        [0, 2, 2],   # tie -> 1, label 1 ok
        [1, 0, 0],   # pred 0 ok
        [0, 1, 0],   # pred 1, label 0 wrong
        [0, 4, 0],   # pred 1 ok
    ], dtype=float)
    ds = make_dataset(g, Z, labels, {"train": [0], "val": [], "test": list(range(1, 10))}, "tie", 3)
    p = ModelParams(W2=np.eye(3))
    assert evaluate("lr", ds, p, "test") == pytest.approx(6 / 9)
    assert evaluate("lr", ds, p, "train") == 1.0
    onehot = np.eye(3)[labels] * 3
    assert evaluate("lr", ds.with_features(onehot), p, "test") == 1.0
    uniform = np.zeros((n, 3))
    assert evaluate("lr", ds.with_features(uniform), p, "test") == pytest.approx(np.mean(labels[1:] == 0))
    with pytest.raises(ValueError):
        evaluate("lr", ds, p, "holdout")


def test_max_singular_value():
    assert max_singular_value(np.eye(3)) == pytest.approx(1.0, rel=1e-8)
    assert max_singular_value(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-8)
    W = np.random.default_rng(0).standard_normal((20, 10))
    assert max_singular_value(W) == pytest.approx(np.linalg.svd(W, compute_uv=False)[0], rel=1e-6)
    assert max_singular_value(np.zeros((2, 2))) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_activations_contract_in_dtilde_norm(seed):
    rng = np.random.default_rng(seed)
    dt = rng.uniform(1, 5, size=12)[:, None]
    X, Y = 3 * rng.standard_normal((12, 4)), 3 * rng.standard_normal((12, 4))
    base = np.sum(dt * (X - Y) ** 2)
    assert np.sum(dt * (relu(X) - relu(Y)) ** 2) <= base + 1e-12
    assert np.sum(dt * (softmax(X) - softmax(Y)) ** 2) <= base + 1e-12


def test_params_json_round_trip():
    p = init_params(4, 3, 2, 7)
    q = ModelParams.from_json(p.to_json())
    for (k, v), (k2, w) in zip(p.items(), q.items()):
        assert k == k2 and np.array_equal(v, w)
    with pytest.raises(ValueError):
        ModelParams.from_json('{"format": "other"}')


def test_model_kind_validation():
    with pytest.raises(ValueError):
        ModelKind("bogus")
    with pytest.raises(ValueError):
        ModelKind("gcn", gcn_norm="x")
    with pytest.raises(ValueError):
        TrainConfig(lr=0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    assert ModelKind("gfnn", FilterSpec("augnorm")).label == "gfnn[augnorm]"


def test_graph_models_need_graph():
    with pytest.raises(ValueError):
        prepare("gcn", None, np.ones((3, 2)))
    with pytest.raises(ValueError):
        prepare("sgc", path_graph(2), np.ones((3, 2)))

import csv
import json

import numpy as np
import pytest

from gfnn import experiments as ex
from gfnn.data import planted_partition, save_dataset
from gfnn.graph import FilterSpec, complete_graph, erdos_renyi, path_graph
from gfnn.models import ModelKind, TrainConfig, mlp_forward
from gfnn.filters import propagate_k
from gfnn.spectral import eigenbasis

SMALL = TrainConfig(epochs=10, hidden=8)


@pytest.fixture(scope="module")
def pp():
    return planted_partition(n=300, c=3, d=60, p_in=0.05, p_out=0.002, seed=0, split_sizes=(30, 60, 150))


def _strip_time(text):
    obj = json.loads(text)
    obj["provenance"].pop("timestamp")
    return obj


def test_report_row_bookkeeping():
    r = ex.ExperimentReport("x", {})
    row = r.add("s", "m", "acc", [0, 1, 2], [0.5, 0.7, 0.9])
    assert row["mean"] == pytest.approx(np.mean(row["values"]))
    assert row["std"] == pytest.approx(np.std(row["values"]))
    assert r.row("s", "m")["seeds"] == [0, 1, 2]
    with pytest.raises(KeyError):
        r.row("s", "other")
    assert list(r.lines())[0].startswith("x s m acc: 0.7000")


def test_freq_sweep(pp, tmp_path):
    rep = ex.freq_sweep(pp, sigma_list=(0.0, 0.05), k_fractions=(0.05, 0.2, 1.0), config=SMALL, seeds=range(2))
    assert len(rep.rows) == 2 * 4
    for row in rep.rows:
        assert row["seeds"] == [0, 1] and all(0 <= v <= 1 for v in row["values"])
    s = rep.summary["sigma=0.0"]
    assert s["best_fraction"] in (0.05, 0.2, 1.0)
    # full reconstruction is the identity, so it reproduces the raw-feature MLP
    for sigma in (0.0, 0.05):
        full = rep.row(f"sigma={sigma},k=1.0", "mlp")["values"]
        raw = rep.row(f"sigma={sigma},raw", "mlp")["values"]
        assert np.allclose(full, raw, atol=0.02)
    again = ex.freq_sweep(pp, sigma_list=(0.0, 0.05), k_fractions=(0.05, 0.2, 1.0), config=SMALL, seeds=range(2))
    assert _strip_time(rep.to_json()) == _strip_time(again.to_json())


def test_freq_sweep_partial_basis_limit(pp):
    basis = eigenbasis(pp.graph, 1.0, k=30)
    with pytest.raises(ValueError):
        ex.freq_sweep(pp, (0.0,), (0.5,), SMALL, range(1), basis=basis)


def test_noise_sweep(pp):
    models = [ModelKind("mlp"), ModelKind("sgc"), ModelKind("gfnn", FilterSpec("augnorm")),
              ModelKind("gfnn", FilterSpec("leftnorm"))]
    rep = ex.noise_sweep(pp, sigma_range=(0.0, 0.05), models=models, config=SMALL, seeds=range(2))
    assert {r["model"] for r in rep.rows} == {"mlp", "sgc", "gfnn[augnorm]", "gfnn[leftnorm]"}
    best = rep.summary["sigma=0.05"]
    means = {r["model"]: r["mean"] for r in rep.rows if r["setting"] == "sigma=0.05"}
    assert best["best_gfnn_mean"] == max(means["gfnn[augnorm]"], means["gfnn[leftnorm]"])
    assert best["best_of_filters"] is True
    par = ex.noise_sweep(pp, sigma_range=(0.0, 0.05), models=models, config=SMALL, seeds=range(2), jobs=3)
    assert [r["values"] for r in par.rows] == [r["values"] for r in rep.rows]


def test_benchmark_table(pp, tmp_path):
    save_dataset(pp, tmp_path / "pp")
    rep = ex.benchmark_table([tmp_path / "pp", tmp_path / "missing"], trials=2, config=SMALL)
    assert len(rep.summary["skipped"]) == 1 and "missing" in rep.summary["skipped"][0]["dataset"]
    # the planted partition has isolated vertices, where the unaugmented filter is undefined
    assert pp.graph.has_isolated()
    assert [d["model"] for d in rep.summary["skipped_models"]["planted_partition"]] == ["gfnn[bilateral]"]
    best = rep.row("planted_partition", "gfnn")
    assert best["best_of_filters"].startswith("gfnn[")
    assert best["values"] == rep.row("planted_partition", best["best_of_filters"])["values"]


def test_two_circles_small(tmp_path):
    rep, extra = ex.two_circles_experiment(n=500, config=TrainConfig(epochs=20), seeds=range(2), grid=6)
    assert rep.config["edges"] >= 500 * 5 / 2
    header, rows = extra["predictions.csv"]
    assert header[:3] == ["x", "y", "label"] and len(rows) == 500
    assert len(extra["grid.csv"][1]) == 36 * 3
    out = ex.write_report(rep, tmp_path, extra)
    with open(out / "curves.csv") as fh:
        r = list(csv.reader(fh))
    assert r[0] == ["experiment", "setting", "model", "seed", "metric", "value"]
    assert len(r) == 1 + 4 * 2
    assert (out / "predictions.csv").read_text().splitlines()[0].startswith("x,y,label,mlp")
    json.loads((out / "report.json").read_text())


def test_theory_checks_on_small_fixtures():
    cfg = ex.TheoryCheckConfig(seeds=tuple(range(5)))
    for g in (path_graph(2), complete_graph(3)):
        rep = ex.theory_checks(g, cfg)
        assert rep.summary["all_passed"], {k: v["passed"] for k, v in rep.summary.items() if isinstance(v, dict)}


def test_shrinking_on_p2():
    res = ex.check_spectrum_shrinking(path_graph(2))
    assert res["passed"]
    assert res["spectra"]["0.0"] == pytest.approx([0.0, 2.0], abs=1e-12)
    assert res["spectra"]["1.0"] == pytest.approx([0.0, 1.0], abs=1e-12)


def test_bias_variance_zero_frequency_cell():
    g = erdos_renyi(100, 0.05, 0)
    cfg = ex.TheoryCheckConfig(eps_fracs=(0.0,), seeds=tuple(range(20)))
    res = ex.check_bias_variance(g, eigenbasis(g, 1.0), cfg)
    assert res["passed"]
    assert all(c["max_ratio"] <= 1.0 for c in res["cells"])


def test_filtered_mlp_exact_without_noise():
    g = erdos_renyi(60, 0.08, 1)
    b = eigenbasis(g, 1.0)
    Xbar = ex.low_frequency_signal(b, 0.0, 4, np.random.default_rng(0))
    Xf = propagate_k(g, FilterSpec("leftnorm", 1.0, 2), Xbar)
    W = ex._random_weights(4, 6, 3, np.random.default_rng(1))
    assert np.allclose(Xf, Xbar, atol=1e-12)
    assert np.max(np.abs(mlp_forward(Xbar, W) - mlp_forward(Xf, W))) <= 1e-12


def test_low_frequency_signal_is_band_limited():
    g = erdos_renyi(80, 0.06, 2)
    b = eigenbasis(g, 1.0)
    eps = 0.1 * b.lambdas[-1]
    X = ex.low_frequency_signal(b, eps, 3, np.random.default_rng(0))
    from gfnn.spectral import gft
    Xh = gft(b, X)
    assert np.allclose(Xh[b.lambdas > eps + 1e-12], 0, atol=1e-9)


def test_theory_config_validation():
    with pytest.raises(ValueError):
        ex.TheoryCheckConfig(delta=0.5)
    with pytest.raises(ValueError):
        ex.TheoryCheckConfig(eps_fracs=(-0.1,))

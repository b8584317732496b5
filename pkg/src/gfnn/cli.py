"""Command-line entry point: ``gfnn <subcommand> [flags]``.

Exit status is 0 on success, 1 when arguments or inputs fail validation and
2 when a run fails after validation.
"""

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

from . import experiments as ex
from .data import (DatasetError, NoiseSpec, add_noise, knn_graph, load_dataset, resolve_dataset_path,
                   save_dataset, two_circles, two_circles_dataset)
from .graph import FilterSpec, GraphError, complete_graph, erdos_renyi, path_graph
from .models import MODEL_NAMES, ModelKind, TrainConfig, evaluate, prepare, train
from .spectral import DENSE_LIMIT, eigenbasis, frequency_profile, write_profile_csv

SUBCOMMANDS = ("gen-two-circles", "spectral", "train", "freq-sweep", "noise-sweep",
               "two-circles", "benchmark", "theory-check")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def parse_seeds(text):
    """``a..b`` (inclusive) or a comma-separated list."""
    text = text.strip()
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            a, b = int(a), int(b)
            if b < a:
                raise ValueError
            return list(range(a, b + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}; use a..b or a,b,c") from None


def _floats(text):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number list {text!r}") from None


def _pair(text):
    vals = [int(s) for s in text.split(",")]
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated counts")
    return tuple(vals)


def _add_filter(p):
    p.add_argument("--filter", choices=("leftnorm", "augnorm", "bilateral"), default="leftnorm",
                   help="propagation operator for gfnn (default: leftnorm)")
    p.add_argument("--gamma", type=float, default=1.0, help="self-loop weight (default: 1.0)")
    p.add_argument("--k", type=int, default=2, help="propagation power (default: 2)")
    p.add_argument("--alpha", type=float, default=1.0, help="bilateral scale (default: 1.0)")


def _add_train(p, epochs=50):
    p.add_argument("--lr", type=float, default=0.2, help="Adam step size (default: 0.2)")
    p.add_argument("--epochs", type=int, default=epochs, help=f"training epochs (default: {epochs})")
    p.add_argument("--hidden", type=int, default=32, help="hidden units (default: 32)")
    p.add_argument("--weight-decay", type=float, default=0.0, help="L2 penalty on weights (default: 0)")
    p.add_argument("--no-bias", action="store_true", help="drop bias terms from all layers")
    p.add_argument("--gcn-norm", choices=("rw", "sym"), default="rw",
                   help="GCN propagation: D~^-1 A~ (rw) or D~^-1/2 A~ D~^-1/2 (sym)")


def _add_common(p, seeds="0..4"):
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seeds", type=parse_seeds, default=parse_seeds(seeds),
                   help=f"seed range a..b or list (default: {seeds})")
    p.add_argument("--jobs", type=int, default=1, help="parallel trials; 1 keeps runs deterministic")


def build_parser():
    parser = _Parser(prog="gfnn", description="Graph filter neural network experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-two-circles", help="write a two-circles dataset directory")
    p.add_argument("--n", type=int, default=4000)
    p.add_argument("--knn", type=int, default=5)
    p.add_argument("--noise-sd", type=float, default=ex.TWO_CIRCLES_NOISE)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=_pair, default=(80, 80), help="train,val sizes (rest is test)")
    p.add_argument("--out", required=True, help="dataset directory to create")

    p = sub.add_parser("spectral", help="frequency profile of a dataset's features")
    p.add_argument("--dataset", required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--partial", type=int, default=None, help="compute only the lowest K frequencies")
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--out", default="out")

    p = sub.add_parser("train", help="train one model and report its test accuracy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", choices=MODEL_NAMES, required=True)
    _add_filter(p)
    _add_train(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0, help="feature noise standard deviation")
    p.add_argument("--save-params", default=None, help="write trained parameters as JSON")
    p.add_argument("--out", default="out")

    p = sub.add_parser("freq-sweep", help="MLP accuracy versus number of kept frequencies")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sigmas", type=_floats, default=list(ex.DEFAULT_SIGMAS))
    p.add_argument("--fractions", type=_floats, default=list(ex.DEFAULT_FRACTIONS))
    p.add_argument("--gamma", type=float, default=1.0)
    _add_train(p, epochs=20)
    _add_common(p)

    p = sub.add_parser("noise-sweep", help="accuracy of every model under feature noise")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sigmas", type=_floats, default=list(ex.NOISE_GRID))
    p.add_argument("--models", default="mlp,lr,gcn,sgc,gfnn",
                   help="comma list; gfnn expands to all three filters")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--keep-split", action="store_true", help="use the dataset's split for every seed")
    _add_train(p)
    _add_common(p)

    p = sub.add_parser("two-circles", help="two-circles expressiveness experiment")
    p.add_argument("--n", type=int, choices=(500, 4000), default=4000)
    p.add_argument("--knn", type=int, default=5)
    p.add_argument("--noise-sd", type=float, default=ex.TWO_CIRCLES_NOISE)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=0, help="also classify a GRIDxGRID lattice")
    _add_train(p)
    _add_common(p)

    p = sub.add_parser("benchmark", help="accuracy table over random splits")
    p.add_argument("--datasets", nargs="+", required=True)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--gamma", type=float, default=1.0)
    _add_train(p)
    p.add_argument("--out", default="out")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("theory-check", help="empirical checks of the filtering bounds")
    p.add_argument("--graph", choices=("er", "p2", "k3", "path", "complete", "circles", "dataset"), default="er")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=float, default=0.05)
    p.add_argument("--graph-seed", type=int, default=0)
    p.add_argument("--dataset", default=None)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--out", default="out")
    p.add_argument("--seeds", type=parse_seeds, default=parse_seeds("0..19"))
    return parser


def _train_config(args, seed=0):
    return TrainConfig(lr=args.lr, epochs=args.epochs, hidden=args.hidden, seed=seed,
                       weight_decay=args.weight_decay, bias=not args.no_bias)


def _load(path):
    return load_dataset(resolve_dataset_path(path))


def _print_report(report):
    for line in report.lines():
        print(line)


def _models_from(text, gamma, alpha, gcn_norm):
    out = []
    for name in [s.strip() for s in text.split(",") if s.strip()]:
        if name == "gfnn":
            out += [ModelKind("gfnn", FilterSpec(k, gamma, 2, alpha)) for k in ex.FILTER_KINDS]
        elif name.startswith("gfnn[") and name.endswith("]"):
            out.append(ModelKind("gfnn", FilterSpec(name[5:-1], gamma, 2, alpha)))
        else:
            out.append(ModelKind(name, FilterSpec("leftnorm", gamma, 2), gcn_norm=gcn_norm))
    return out


def _cmd_gen(args):
    ds = two_circles_dataset(args.n, args.knn, args.noise_sd, args.seed, args.split, args.seed)
    save_dataset(ds, args.out)
    print(f"wrote {args.out}: n={ds.n} edges={ds.graph.num_edges} d={ds.d} c={ds.c}")


def _cmd_spectral(args):
    ds = _load(args.dataset)
    if args.partial is None and ds.n > DENSE_LIMIT:
        raise DatasetError(f"n={ds.n} exceeds the dense limit; pass --partial K")
    basis = eigenbasis(ds.graph, args.gamma, k=args.partial)
    prof = frequency_profile(basis, ds.X, args.tau)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_profile_csv(out / "profile.csv", prof)
    rep = ex._new_report("spectral", {"dataset": ds.name, "gamma": args.gamma, "tau": args.tau,
                                      "partial": args.partial})
    rep.add("cutoff", "-", "lambda", [0], [prof.cutoff])
    rep.add("lambda_max", "-", "lambda", [0], [float(basis.lambdas[-1])])
    ex.write_report(rep, out)
    _print_report(rep)


def _cmd_train(args):
    spec = FilterSpec(args.filter, args.gamma, args.k, args.alpha)
    kind = ModelKind(args.model, spec, gcn_norm=args.gcn_norm)
    cfg = _train_config(args, args.seed)
    ds = _load(args.dataset)
    if args.noise:
        ds = ds.with_features(add_noise(ds.X, NoiseSpec(args.noise, args.seed)))
    prep = prepare(kind, ds.graph, ds.X)
    params, hist = train(kind, ds, cfg, prepared=prep)
    rep = ex._new_report("train", {"dataset": ds.name, "model": kind.label, "filter": asdict(spec),
                                   "train": asdict(cfg), "noise": args.noise})
    for split in ("train", "val", "test"):
        if len(ds.splits[split]):
            rep.add(split, kind.label, "acc", [args.seed], [evaluate(kind, ds, params, split, prep)])
    rep.summary["final_train_loss"] = hist["train_loss"][-1]
    ex.write_report(rep, args.out)
    if args.save_params:
        Path(args.save_params).write_text(params.to_json())
    _print_report(rep)


def _cmd_freq(args):
    ds = _load(args.dataset)
    cfg = _train_config(args)
    rep = ex.freq_sweep(ds, args.sigmas, args.fractions, cfg, args.seeds, args.gamma, jobs=args.jobs)
    ex.write_report(rep, args.out)
    _print_report(rep)


def _cmd_noise(args):
    models = _models_from(args.models, args.gamma, args.alpha, args.gcn_norm)
    cfg = _train_config(args)
    ds = _load(args.dataset)
    rep = ex.noise_sweep(ds, args.sigmas, models, cfg, args.seeds, resplit=not args.keep_split, jobs=args.jobs)
    ex.write_report(rep, args.out)
    _print_report(rep)


def _cmd_circles(args):
    cfg = _train_config(args)
    models = [ModelKind("mlp"), ModelKind("gcn", gcn_norm=args.gcn_norm), ModelKind("sgc"), ModelKind("gfnn")]
    rep, extra = ex.two_circles_experiment(args.n, cfg, args.seeds, args.noise_sd, args.knn,
                                           data_seed=args.data_seed, models=models, grid=args.grid,
                                           jobs=args.jobs)
    ex.write_report(rep, args.out, extra_csv=extra)
    _print_report(rep)


def _cmd_bench(args):
    cfg = _train_config(args)
    models = [ModelKind("gcn", FilterSpec("leftnorm", args.gamma), gcn_norm=args.gcn_norm),
              ModelKind("sgc", FilterSpec("leftnorm", args.gamma))] + [
        ModelKind("gfnn", FilterSpec(k, args.gamma)) for k in ex.FILTER_KINDS]
    dirs = []
    for d in args.datasets:
        try:
            dirs.append(resolve_dataset_path(d))
        except DatasetError:
            dirs.append(Path(d))
    rep = ex.benchmark_table(dirs, models, args.trials, cfg, jobs=args.jobs)
    ex.write_report(rep, args.out)
    for s in rep.summary["skipped"]:
        print(f"SKIPPED {s['dataset']}: {s['reason']}")
    _print_report(rep)


def _cmd_theory(args):
    cfg = ex.TheoryCheckConfig(seeds=tuple(args.seeds), delta=args.delta, gamma=args.gamma)
    if args.graph == "er":
        g, name = erdos_renyi(args.n, args.p, args.graph_seed), f"er(n={args.n},p={args.p},seed={args.graph_seed})"
    elif args.graph == "p2":
        g, name = path_graph(2), "P2"
    elif args.graph == "k3":
        g, name = complete_graph(3), "K3"
    elif args.graph == "path":
        g, name = path_graph(args.n), f"P{args.n}"
    elif args.graph == "complete":
        g, name = complete_graph(args.n), f"K{args.n}"
    elif args.graph == "circles":
        pts, _ = two_circles(args.n, ex.TWO_CIRCLES_NOISE, args.graph_seed)
        g, name = knn_graph(pts, 5), f"circles{args.n}"
    else:
        if not args.dataset:
            raise UsageError("gfnn: error: theory-check --graph dataset needs --dataset")
        ds = _load(args.dataset)
        g, name = ds.graph, ds.name
    if g.n > DENSE_LIMIT:
        raise GraphError(f"n={g.n} exceeds the dense eigensolver limit")
    rep = ex.theory_checks(g, cfg, name)
    ex.write_report(rep, args.out)
    for key in ex.CHECKS:
        print(f"{key}: {'PASS' if rep.summary[key]['passed'] else 'FAIL'}")
    print(f"all: {'PASS' if rep.summary['all_passed'] else 'FAIL'}")
    return 0 if rep.summary["all_passed"] else 2


COMMANDS = {
    "gen-two-circles": _cmd_gen,
    "spectral": _cmd_spectral,
    "train": _cmd_train,
    "freq-sweep": _cmd_freq,
    "noise-sweep": _cmd_noise,
    "two-circles": _cmd_circles,
    "benchmark": _cmd_bench,
    "theory-check": _cmd_theory,
}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + f"gfnn: error: choose one of {', '.join(SUBCOMMANDS)}")
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("gfnn: error: --jobs must be at least 1")
        code = COMMANDS[args.command](args)
        return 0 if code is None else code
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 1
    except (DatasetError, GraphError, ValueError) as exc:
        print(f"gfnn: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any failure past validation maps to status 2
        print(f"gfnn: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

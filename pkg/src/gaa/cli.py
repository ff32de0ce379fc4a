"""Command-line driver.

Verbs: ``train``, ``eval``, ``generate``, ``bound``, ``diagnose``, ``sweep``.
Exit codes: 0 success, 1 configuration problems, 2 runtime failures. Every
command that takes ``--seed`` writes byte-reproducible output files; measured
wall time goes to stdout, never into seeded artifacts.

A pair directory (as produced by ``generate``) holds::

    source.edges  source.features.csv  source.labels.txt
    target.edges  target.features.csv  [target.labels.txt]  pair.json
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
import time
from dataclasses import replace
from multiprocessing import Pool
from pathlib import Path

from .exceptions import ConfigError, GaaError, ParseError
from .analysis import avg_feature_value, proposition1_bound
from .graphs import (
    DomainPair,
    Graph,
    gen_attribute_shift,
    gen_sbm,
    load_graph,
    save_graph,
    save_metrics,
)
from .losses import LossWeights
from .model import load_model, save_model
from .train import TrainConfig, evaluate, run_repeated, train_gaa

DEFAULT_SWEEP_GRID = {
    "alpha": [0.005, 0.01, 0.1, 0.5, 1.0, 5.0],
    "beta": [0.005, 0.01, 0.1, 0.5, 1.0, 5.0],
    "tau": [0.005, 0.01, 0.1, 0.5, 1.0, 5.0],
    "k": list(range(1, 11)),
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; config problems are exit 1 here
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gaa", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_pair_arg(p):
        p.add_argument("--pair", required=True, help="pair directory from `generate`")

    train = sub.add_parser("train", help="train a model on a pair, write metrics + checkpoint")
    add_pair_arg(train)
    train.add_argument("--config", help="JSON file mirroring the training config")
    train.add_argument("--seed", type=int)
    train.add_argument("--runs", type=int, default=1, help="repeated runs (seed, seed+1, ...)")
    train.add_argument("--variant")
    train.add_argument("--out", required=True)
    train.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config field, e.g. lr=0.003 or weights.alpha=0.5")

    ev = sub.add_parser("eval", help="load a checkpoint and report accuracy on a labeled graph")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--edges", required=True)
    ev.add_argument("--features", required=True)
    ev.add_argument("--labels", required=True)

    gen = sub.add_parser("generate", help="emit a synthetic domain pair to disk")
    gen.add_argument("--kind", required=True, choices=["attribute-shift", "sbm"])
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--std", type=float, default=1.2, help="target cluster std (attribute-shift)")
    gen.add_argument("--source-std", type=float, default=0.4)
    gen.add_argument("--p", type=float, default=0.8, help="target intra-community prob (sbm)")
    gen.add_argument("--source-p", type=float, default=0.8)
    gen.add_argument("--n", type=int, default=100)
    gen.add_argument("--d", type=int, default=10)
    gen.add_argument("--edge-prob", type=float, default=0.3)

    bound = sub.add_parser("bound", help="print the pairwise divergence report for a pair")
    add_pair_arg(bound)
    bound.add_argument("--normalize-by", type=int, default=None)

    diag = sub.add_parser("diagnose", help="print average propagated feature values per view")
    add_pair_arg(diag)
    diag.add_argument("--k", type=int, default=3)

    sweep = sub.add_parser("sweep", help="grid over alpha/beta/tau/k, one CSV row per cell")
    add_pair_arg(sweep)
    sweep.add_argument("--config", help="JSON file mirroring the training config")
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--runs", type=int, default=5)
    sweep.add_argument("--variant")
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--grid", action="append", default=[], metavar="KEY=V1,V2,...",
                       help="override one grid axis (alpha, beta, tau, k)")
    sweep.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return parser


# ---------------------------------------------------------------------------
# config plumbing


def _coerce(field: str, raw: str):
    kinds = {
        "epochs": int, "k": int, "seed": int, "hidden": int, "embed": int,
        "lr": float, "weight_decay": float, "dropout": float, "grl_lambda": float,
        "variant": str,
    }
    if field in ("relu_second_layer",):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected a boolean for {field}, got {raw!r}")
    if field.startswith("weights."):
        return float(raw)
    if field not in kinds:
        raise ConfigError(f"unknown config key {field!r}")
    try:
        return kinds[field](raw)
    except ValueError:
        raise ConfigError(f"bad value for {field}: {raw!r}")


def _load_config(args) -> TrainConfig:
    doc = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}")
    cfg = TrainConfig.from_dict(doc)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "variant", None) is not None:
        cfg = replace(cfg, variant=args.variant)
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise ConfigError(f"--set needs KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        value = _coerce(key, raw)
        if key.startswith("weights."):
            wfield = key.split(".", 1)[1]
            if wfield not in ("alpha", "beta", "tau"):
                raise ConfigError(f"unknown config key {key!r}")
            cfg = replace(cfg, weights=replace(cfg.weights, **{wfield: value}))
        else:
            cfg = replace(cfg, **{key: value})
    return cfg


def load_pair(pair_dir) -> DomainPair:
    pair_dir = Path(pair_dir)
    if not pair_dir.is_dir():
        raise ConfigError(f"pair directory not found: {pair_dir}")
    source = load_graph(pair_dir / "source.edges", pair_dir / "source.features.csv",
                        pair_dir / "source.labels.txt")
    target_labels = pair_dir / "target.labels.txt"
    target = load_graph(pair_dir / "target.edges", pair_dir / "target.features.csv",
                        target_labels if target_labels.exists() else None)
    return DomainPair(source=source, target=target)


def _write_pair(pair: DomainPair, out_dir: Path, meta: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    save_graph(pair.source, out_dir / "source.edges", out_dir / "source.features.csv",
               out_dir / "source.labels.txt")
    save_graph(pair.target, out_dir / "target.edges", out_dir / "target.features.csv",
               out_dir / "target.labels.txt" if pair.target.labels is not None else None)
    with open(out_dir / "pair.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# verbs


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    pair = load_pair(args.pair)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    if args.runs <= 1:
        model, metrics = train_gaa(pair, cfg)
        metrics.wall_seconds = 0.0  # keep seeded outputs byte-reproducible
        save_metrics(metrics, out / "metrics.json")
        save_model(model, out / "model.bin")
        print(f"accuracy={metrics.target_accuracy} "
              f"elapsed={time.perf_counter() - started:.2f}s -> {out}")
    else:
        result = run_repeated(pair, cfg, n_runs=args.runs)
        for i, metrics in enumerate(result.metrics):
            metrics.wall_seconds = 0.0
            save_metrics(metrics, out / f"metrics_run{i}.json")
        model, _ = train_gaa(pair, cfg)
        save_model(model, out / "model.bin")
        with open(out / "summary.json", "w", encoding="utf-8") as fh:
            json.dump({"mean_acc": result.mean_acc, "std_acc": result.std_acc,
                       "accuracies": result.accuracies, "runs": args.runs}, fh, indent=2)
            fh.write("\n")
        print(f"mean_acc={result.mean_acc:.4f} std_acc={result.std_acc:.4f} "
              f"elapsed={time.perf_counter() - started:.2f}s -> {out}")
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.checkpoint)
    graph = load_graph(args.edges, args.features, args.labels)
    acc = evaluate(model, graph)
    print(json.dumps({"accuracy": acc}))
    return 0


def _cmd_generate(args) -> int:
    if args.kind == "attribute-shift":
        source = gen_attribute_shift(args.source_std, args.seed, n=args.n, d=args.d,
                                     edge_prob=args.edge_prob)
        target = gen_attribute_shift(args.std, args.seed, n=args.n, d=args.d,
                                     edge_prob=args.edge_prob)
        meta = {"kind": args.kind, "seed": args.seed, "n": args.n, "d": args.d,
                "edge_prob": args.edge_prob, "source_std": args.source_std,
                "target_std": args.std}
    else:
        source = gen_sbm(args.seed, n=args.n, p=args.source_p, d=args.d)
        target = gen_sbm(args.seed, n=args.n, p=args.p, d=args.d)
        meta = {"kind": args.kind, "seed": args.seed, "n": args.n, "d": args.d,
                "source_p": args.source_p, "target_p": args.p}
    pair = DomainPair(source=source, target=target)
    _write_pair(pair, Path(args.out), meta)
    print(f"wrote pair to {args.out}")
    return 0


def _cmd_bound(args) -> int:
    pair = load_pair(args.pair)
    report = proposition1_bound(pair.source, pair.target, args.normalize_by)
    print(json.dumps(report.to_dict()))
    return 0


def _cmd_diagnose(args) -> int:
    pair = load_pair(args.pair)
    doc = {}
    for name, graph in (("source", pair.source), ("target", pair.target)):
        doc[name] = {
            "topology": avg_feature_value(graph, "topology"),
            "attribute": avg_feature_value(graph, "attribute", k=args.k),
        }
    print(json.dumps(doc, indent=2))
    return 0


def _parse_grid(items) -> dict:
    grid = dict(DEFAULT_SWEEP_GRID)
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--grid needs KEY=V1,V2,..., got {item!r}")
        key, raw = item.split("=", 1)
        if key not in grid:
            raise ConfigError(f"unknown grid axis {key!r}; expected one of {sorted(grid)}")
        cast = int if key == "k" else float
        try:
            grid[key] = [cast(v) for v in raw.split(",") if v]
        except ValueError:
            raise ConfigError(f"bad grid value in {item!r}")
        if not grid[key]:
            raise ConfigError(f"empty grid for {key!r}")
    return grid


def _sweep_cell(task):
    pair, cfg, runs = task
    result = run_repeated(pair, cfg, n_runs=runs)
    return result.mean_acc, result.std_acc


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    pair = load_pair(args.pair)
    grid = _parse_grid(args.grid)
    cells = list(itertools.product(grid["alpha"], grid["beta"], grid["tau"], grid["k"]))
    tasks = []
    for alpha, beta, tau, k in cells:
        cell_cfg = replace(cfg, k=k, weights=LossWeights(alpha=alpha, beta=beta, tau=tau))
        tasks.append((pair, cell_cfg, args.runs))

    workers = int(os.environ.get("GAA_THREADS", "1"))
    if workers > 1 and len(tasks) > 1:
        with Pool(processes=workers) as pool:
            results = pool.map(_sweep_cell, tasks)
    else:
        results = [_sweep_cell(t) for t in tasks]

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "beta", "tau", "k", "mean_acc", "std_acc"])
        for (alpha, beta, tau, k), (mean_acc, std_acc) in zip(cells, results):
            writer.writerow([repr(alpha), repr(beta), repr(tau), k,
                             repr(mean_acc), repr(std_acc)])
    print(f"wrote {len(cells)} rows to {out}")
    return 0


_HANDLERS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "generate": _cmd_generate,
    "bound": _cmd_bound,
    "diagnose": _cmd_diagnose,
    "sweep": _cmd_sweep,
}


def run_command(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _HANDLERS[args.verb](args)
    except (ConfigError, ParseError) as exc:
        # user-fixable input problems
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GaaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()

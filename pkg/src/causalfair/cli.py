"""Command-line entry point: ``causalfair <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from causalfair import pipeline
from causalfair.generator import generate, load, save
from causalfair.graph import FairnessSpec, GraphError, edges_to_remove
from causalfair.metrics import (
    EvalReport, auroc, dp_metric, ftu_metric, precision_recall, train_downstream,
)
from causalfair.pipeline import ConfigError, ExperimentConfig
from causalfair.table import SchemaError
from causalfair.training import TrainConfig, fit

# ExperimentConfig fields that may be overridden from the command line
_LIST_FLAGS = {"variants": str, "betas": float, "drop": str, "perturb_modes": str, "explanatory": str, "proxies": str}
_SCALAR_FLAGS = {"name": str, "dag": str, "protected": str, "target": str, "repeats": int, "holdout": int,
                 "bias": float, "perturb_max": int, "synth_rows": int, "k": int, "seed": int, "workers": int,
                 "output_dir": str, "downstream_iter": int}
_TRAIN_FLAGS = {"epochs": int, "learning_rate": float, "batch_size": int, "discriminator_steps": int,
                "hidden_layers": int, "hidden_width": int, "l2": float}


def _add_train_flags(p):
    g = p.add_argument_group("training")
    for name, typ in _TRAIN_FLAGS.items():
        g.add_argument(f"--{name.replace('_', '-')}", type=typ, dest=f"train_{name}")


def _add_config_flags(p):
    p.add_argument("--config", help="experiment config JSON; flags below override its fields")
    p.add_argument("--sem", help="SEM data source: bundled name or JSON path")
    p.add_argument("--n", type=int, help="rows to draw from the SEM")
    p.add_argument("--csv", help="CSV data source (needs --dag)")
    p.add_argument("--bias-edge", action="store_true", default=None, help="add protected -> target to the graph")
    p.add_argument("--no-synthetic", action="store_true", help="do not write synthetic CSVs")
    for name, typ in _SCALAR_FLAGS.items():
        p.add_argument(f"--{name.replace('_', '-')}", type=typ)
    for name, typ in _LIST_FLAGS.items():
        p.add_argument(f"--{name.replace('_', '-')}", type=typ, nargs="+")
    _add_train_flags(p)


def config_from_args(args) -> ExperimentConfig:
    obj = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.sem or args.csv:
        obj["data"] = {"sem": args.sem, "n": args.n or 5000} if args.sem else {"csv": args.csv}
    elif args.n is not None:
        obj.setdefault("data", {"sem": "credit"})
        obj["data"] = {**obj["data"], "n": args.n}
    for name in (*_SCALAR_FLAGS, *_LIST_FLAGS):
        val = getattr(args, name)
        if val is not None:
            obj[name] = val
    if args.bias_edge:
        obj["bias_edge"] = True
    if args.no_synthetic:
        obj["save_synthetic"] = False
    train = dict(obj.get("train", {}))
    for name in _TRAIN_FLAGS:
        val = getattr(args, f"train_{name}")
        if val is not None:
            train[name] = val
    obj["train"] = train
    return ExperimentConfig.from_dict(obj)


def _train_config(args) -> TrainConfig:
    kw = {name: getattr(args, f"train_{name}") for name in _TRAIN_FLAGS if getattr(args, f"train_{name}") is not None}
    return TrainConfig(seed=args.seed, **kw)


def _spec(args) -> FairnessSpec:
    return FairnessSpec(args.definition, args.protected, args.target,
                        explanatory=args.explanatory, proxies=args.proxies)


# -- subcommands -----------------------------------------------------------

def cmd_fit(args) -> int:
    dag = pipeline.load_dag(args.dag)
    data = pipeline.ingest(args.data, dag.schema)
    model = fit(data, dag, _train_config(args), log_path=args.log)
    save(model, args.out)
    print(f"saved {args.out} ({model.fingerprint()[:12]})")
    return 0


def cmd_generate(args) -> int:
    model = load(args.model)
    removed = None
    if args.definition:
        removed = edges_to_remove(model.dag, _spec(args))
        for edge in removed:
            print(f"removing {edge[0]} -> {edge[1]}: {removed.rationale[edge]}", file=sys.stderr)
    table = generate(model, args.rows, removed, None, args.seed)
    table.to_csv(args.out)
    print(f"wrote {table.n_rows} rows to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    dag = pipeline.load_dag(args.dag)
    synth = pipeline.ingest(args.synthetic, dag.schema)
    test = pipeline.ingest(args.test, dag.schema)
    real = pipeline.ingest(args.real, dag.schema) if args.real else test
    clf = train_downstream(synth, args.target, seed=args.seed)
    run = {"auroc": auroc(clf, test, args.target),
           "ftu": ftu_metric(clf, test, args.protected),
           "dp": dp_metric(clf, test, args.protected)}
    run["precision"], run["recall"] = precision_recall(real, synth, args.k)
    report = EvalReport(args.variant, [run], [args.seed])
    if args.out:
        report.save(args.out)
    print(json.dumps(report.summary(), indent=2, sort_keys=True))
    return 0


def _report(result) -> int:
    for c in result.cells:
        label = pipeline.cell_label(c.cell)
        for v, rep in sorted(c.reports.items()):
            means = "  ".join(f"{m}={rep.mean(m):.3f}" for m in ("precision", "recall", "auroc", "ftu", "dp"))
            print(f"{label:<24} {v:<6} n={rep.n_runs}  {means}")
        for s in c.skipped:
            print(f"{label:<24} skipped repeat {s['repeat']}: {s['reason']}")
        for f in c.failed:
            print(f"{label:<24} FAILED repeat {f['repeat']}: {f['reason']}")
    if result.summary:
        print(json.dumps(result.summary, indent=2, sort_keys=True))
    print(f"results in {result.config.run_dir()}")
    return 0 if result.complete else 1


def cmd_run(args) -> int:
    try:
        result = pipeline.run_experiment(config_from_args(args))
    except pipeline.RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return _report(result)


def cmd_sweep(args) -> int:
    return _report(pipeline.sweep_bias(config_from_args(args)))


def cmd_ablate(args) -> int:
    return _report(pipeline.run_ablation(config_from_args(args)))


def cmd_baseline_pr(args) -> int:
    config = config_from_args(args)
    if "DP" not in config.variants:
        config = replace(config, variants=(*config.variants, "DP"))
    return _report(pipeline.run_baseline_pr(config))


def cmd_confounder(args) -> int:
    return _report(pipeline.run_hidden_confounder(config_from_args(args)))


def cmd_prepare_adult(args) -> int:
    table = pipeline.prepare_adult(args.raw, args.out)
    print(f"wrote {table.n_rows} rows x {len(table.names)} columns to {args.out}")
    return 0


def cmd_plot(args) -> int:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("error: plotting needs matplotlib (pip install causalfair[plot])", file=sys.stderr)
        return 1
    import pandas as pd

    tidy = pd.read_csv(args.tidy)
    tidy = tidy[tidy["beta"].notna()]
    if tidy.empty:
        print("error: no bias-sweep rows to plot", file=sys.stderr)
        return 1
    metrics = ["precision", "recall", "auroc", "ftu", "dp"]
    fig, axes = plt.subplots(1, len(metrics), figsize=(4 * len(metrics), 3.2))
    for ax, metric in zip(axes, metrics):
        sub = tidy[tidy["metric"] == metric]
        for variant, grp in sub.groupby("variant"):
            stats = grp.groupby("beta")["value"].agg(["mean", "std"]).reset_index()
            ax.errorbar(stats["beta"], stats["mean"], yerr=stats["std"], label=variant, capsize=3)
        ax.set_title(metric)
        ax.set_xlabel("beta")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causalfair", description="Causally-aware fair synthetic data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="train a generator on a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--dag", required=True, help="DAG JSON or bundled name")
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="JSON-lines training log")
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("generate", help="sample from a saved model, optionally debiased")
    p.add_argument("--model", required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--definition", help="FTU, DP, CF or a path-based definition")
    p.add_argument("--protected")
    p.add_argument("--target")
    p.add_argument("--explanatory", nargs="*")
    p.add_argument("--proxies", nargs="*")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score synthetic data with a downstream classifier")
    p.add_argument("--synthetic", required=True)
    p.add_argument("--test", required=True, help="held-out real rows")
    p.add_argument("--real", help="real training rows for precision/recall (default: --test)")
    p.add_argument("--dag", required=True)
    p.add_argument("--protected", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--variant", default="synthetic")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    for name, func, text in (
        ("run", cmd_run, "repeated runs of one configuration"),
        ("sweep", cmd_sweep, "bias sweep over --betas"),
        ("ablate", cmd_ablate, "DAG perturbation ablation"),
        ("baseline-pr", cmd_baseline_pr, "protected-removal baseline"),
        ("confounder", cmd_confounder, "bias sweep with --drop columns hidden"),
    ):
        p = sub.add_parser(name, help=text)
        _add_config_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("prepare-adult", help="binarize the raw census file")
    p.add_argument("raw")
    p.add_argument("out")
    p.set_defaults(func=cmd_prepare_adult)

    p = sub.add_parser("plot", help="render a bias-sweep tidy CSV (needs matplotlib)")
    p.add_argument("tidy")
    p.add_argument("out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SchemaError, GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

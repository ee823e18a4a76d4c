"""Experiment orchestration: data ingestion, repeated runs, sweeps, ablations and baselines.

Every experiment is a grid of *cells* (a bias level, a DAG perturbation, ...)
times ``repeats``. One unit of work fits one generator, then generates and
scores each requested variant from that same model. Units are independent
and may run in worker processes; results are reduced in a fixed order, so
the report does not depend on scheduling.

Output layout under ``<output_dir>/<name>``::

    config.json
    report.json            metric values only, no wall-clock fields
    tidy-metrics.csv       one row per run x metric
    timings.json           wall-clock seconds per unit
    <cell>/repeat_<r>/     model.cfgm, train_log.jsonl, synthetic_<variant>.csv
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from causalfair.generator import generate, save
from causalfair.graph import (
    CausalDag, Definition, EdgeRemovalSet, FairnessSpec, InfeasiblePerturbationError, drop_nodes, edges_to_remove, perturb_dag,
)
from causalfair.metrics import (
    METRICS, EvalReport, auroc, dp_metric, ftu_metric, precision_recall, train_downstream,
)
from causalfair.sem import SemSpec, inject_direct_bias, load_builtin, sample
from causalfair.surrogate import FixedValue, MarginalSample, SurrogatePolicy
from causalfair.table import BINARY, CONTINUOUS, Column, SchemaError, Table
from causalfair.training import TrainConfig, fit

OUTPUT_ENV = "CAUSALFAIR_OUTPUT"
NO_DEBIAS = "ND"
PR_VARIANT = "PR"
DATA_DIR = Path(__file__).parent / "data"


class ConfigError(ValueError):
    pass


class RunError(RuntimeError):
    """A unit of work failed; the message names the cell and repeat."""


# -- configuration ---------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    # {"sem": builtin name or path, "n": rows} or {"csv": path}
    data: dict = field(default_factory=lambda: {"sem": "credit", "n": 5000})
    dag: str | None = None  # path or bundled name; defaults to the SEM's graph
    protected: str = "sex"
    target: str = "good_credit"
    disadvantaged: float = 0.0
    variants: tuple = (NO_DEBIAS, "FTU")
    explanatory: tuple | None = None
    proxies: tuple | None = None
    surrogate: dict = field(default_factory=lambda: {"type": "marginal"})
    train: dict = field(default_factory=dict)
    repeats: int = 1
    holdout: int | None = None  # None: 2000 rows for n >= 10000, else 20%
    bias: float = 0.0
    bias_edge: bool = False  # add protected -> target to the training graph
    betas: tuple = (0.2, 0.4, 0.6, 0.8)
    perturb_modes: tuple = ("remove", "add", "reverse")
    perturb_max: int = 3
    drop: tuple = ()
    synth_rows: int | None = None  # None: as many as training rows
    k: int = 5
    downstream_iter: int = 200
    seed: int = 0
    save_synthetic: bool = True
    workers: int = 1
    output_dir: str | None = None

    def __post_init__(self):
        for name in ("variants", "betas", "perturb_modes", "drop"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name in ("explanatory", "proxies"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not self.variants:
            raise ConfigError("at least one variant is required")
        if len(set(self.variants)) != len(self.variants):
            raise ConfigError("variants must be distinct")
        if not ("sem" in self.data) ^ ("csv" in self.data):
            raise ConfigError("data needs exactly one of 'sem' or 'csv'")
        if "csv" in self.data and self.dag is None:
            raise ConfigError("a CSV data source needs a dag")
        for b in (self.bias, *self.betas):
            if not 0.0 <= b <= 1.0:
                raise ConfigError(f"bias levels must lie in [0, 1], got {b}")
        for m in self.perturb_modes:
            if m not in ("remove", "add", "reverse"):
                raise ConfigError(f"unknown perturbation mode {m!r}")
        if self.surrogate.get("type") not in ("marginal", "fixed"):
            raise ConfigError(f"surrogate must be marginal or fixed, got {self.surrogate!r}")
        for v in self.variants:
            if v != NO_DEBIAS:
                self.spec_for(v)
        used = {self.protected, self.target} | set(self.explanatory or ()) | set(self.proxies or ())
        clash = sorted(used & set(self.drop))
        if clash:
            raise ConfigError(f"cannot drop columns the fairness spec uses: {clash}")
        TrainConfig.from_dict(self.train)

    def spec_for(self, variant: str) -> FairnessSpec:
        try:
            d = Definition(variant)
        except ValueError:
            raise ConfigError(f"unknown variant {variant!r}") from None
        explanatory = self.explanatory if d.value in ("CF", "NoUnresolvedDiscrimination") else None
        proxies = self.proxies if d.value == "NoProxyDiscrimination" else None
        if d.value in ("CF", "NoUnresolvedDiscrimination") and explanatory is None:
            raise ConfigError(f"variant {variant} needs 'explanatory'")
        if d.value == "NoProxyDiscrimination" and proxies is None:
            raise ConfigError(f"variant {variant} needs 'proxies'")
        try:
            return FairnessSpec(d, self.protected, self.target, explanatory, proxies)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig.from_dict({**self.train, "seed": seed})

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ConfigError(f"unknown config fields {unknown}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(obj)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def fingerprint(self) -> str:
        """Hash of every field that can change a metric value."""
        obj = self.to_dict()
        for k in ("workers", "output_dir", "save_synthetic", "name"):
            obj.pop(k)
        return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()

    def run_dir(self) -> Path:
        root = self.output_dir or os.environ.get(OUTPUT_ENV) or "runs"
        return Path(root) / self.name


# -- data ------------------------------------------------------------------

ADULT_RAW_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num", "marital_status", "occupation",
    "relationship", "race", "sex", "capital_gain", "capital_loss", "hours_per_week", "native_country", "income",
]
ADULT_SHA256 = "5b00264637dbfec36bdeaab5676b0b309ff9eb788d63554ca0a249491c86603d"
_WHITE_COLLAR = {"Exec-managerial", "Prof-specialty", "Tech-support", "Sales"}


def prepare_adult(raw_path, out_path=None) -> Table:
    """Binarize the raw census file into the 11 attributes of the bundled graph.

    Rows with a missing ('?') field are dropped. Age, years of education and
    weekly hours stay continuous; the other attributes become indicators.
    """
    frame = pd.read_csv(raw_path, header=None, names=ADULT_RAW_COLUMNS, skipinitialspace=True,
                        dtype=str, comment="|")
    frame = frame.dropna(how="all")
    frame = frame[~frame.apply(lambda c: c.str.strip().eq("?")).any(axis=1)]
    if frame.empty:
        raise SchemaError(f"{raw_path}: no complete rows")
    s = {c: frame[c].str.strip() for c in ADULT_RAW_COLUMNS}
    out = pd.DataFrame({
        "age": pd.to_numeric(s["age"]),
        "sex": (s["sex"] == "Male"),
        "race": (s["race"] == "White"),
        "native_country": (s["native_country"] == "United-States"),
        "education": pd.to_numeric(s["education_num"]),
        "marital_status": s["marital_status"].isin(["Married-civ-spouse", "Married-AF-spouse"]),
        "relationship": s["relationship"].isin(["Husband", "Wife"]),
        "workclass": (s["workclass"] == "Private"),
        "occupation": s["occupation"].isin(_WHITE_COLLAR),
        "hours_per_week": pd.to_numeric(s["hours_per_week"]),
        "income": s["income"].str.rstrip(".").isin([">50K"]),
    })
    dag = load_dag("adult")
    table = Table(dag.schema, out[dag.names].to_numpy(dtype=np.float64))
    if out_path is not None:
        table.to_csv(out_path)
    return table


def load_dag(ref) -> CausalDag:
    """A DAG file path, or the name of a bundled graph such as ``adult``."""
    bundled = DATA_DIR / f"{ref}_dag.json"
    if not Path(ref).exists() and bundled.exists():
        return CausalDag.load(bundled)
    return CausalDag.load(ref)


def load_sem(ref) -> SemSpec:
    if Path(ref).exists():
        return SemSpec.load(ref)
    return load_builtin(ref)


def ingest(path, schema) -> Table:
    """Read a headered CSV against ``schema``; column order in the file is free.

    The result follows the order of ``schema``.
    """
    schema = list(schema)
    header = list(pd.read_csv(path, nrows=0).columns)
    want = [c.name for c in schema]
    if sorted(header) != sorted(want) or len(header) != len(set(header)):
        missing = sorted(set(want) - set(header))
        extra = sorted(set(header) - set(want))
        raise SchemaError(f"{path}: header does not match schema (missing {missing}, unexpected {extra})")
    by_name = {c.name: c for c in schema}
    table = Table.read_csv(path, [by_name[h] for h in header])
    return table.select(want)


def _child_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=keys).generate_state(1)[0])


def _holdout_size(config: ExperimentConfig, n: int) -> int:
    h = config.holdout if config.holdout is not None else (2000 if n >= 10_000 else int(round(0.2 * n)))
    if not 0 < h < n:
        raise ConfigError(f"holdout of {h} rows leaves nothing to train on ({n} rows)")
    return h


def _graph(config: ExperimentConfig) -> CausalDag:
    return load_dag(config.dag) if config.dag else load_sem(config.data["sem"]).dag


def _source(config: ExperimentConfig, seed: int) -> tuple[Table, CausalDag]:
    """The full (train + holdout) table for one repeat, and the graph to fit."""
    if "sem" in config.data:
        sem = load_sem(config.data["sem"])
        n = int(config.data.get("n", 5000))
        dag = load_dag(config.dag) if config.dag else sem.dag
        table = sample(sem, n, _child_seed(seed, 0))
    else:
        dag = load_dag(config.dag)
        table = ingest(config.data["csv"], dag.schema)
        table = table.take(np.random.default_rng(_child_seed(seed, 0)).permutation(table.n_rows))
    return table, dag


# -- one unit of work ------------------------------------------------------

def _surrogate(config: ExperimentConfig, removed: EdgeRemovalSet) -> SurrogatePolicy:
    if config.surrogate["type"] == "fixed":
        return SurrogatePolicy.uniform(removed, FixedValue(float(config.surrogate["value"])))
    return SurrogatePolicy.uniform(removed, MarginalSample())


def _corr_error(a: Table, b: Table) -> float:
    with np.errstate(invalid="ignore", divide="ignore"):
        ca = np.corrcoef(a.values.T)
        cb = np.corrcoef(b.values.T)
    return float(np.nanmax(np.abs(ca - cb)))


def _score(config, model_data: Table, synth: Table, test: Table, protected_in_model: bool, seed: int):
    target, protected = config.target, config.protected
    clf = train_downstream(synth, target, seed=seed % (2**32), max_iter=config.downstream_iter)
    # the classifier picks its features by name, so a run without the protected
    # column gets an exact zero here
    metrics = {
        "auroc": auroc(clf, test, target),
        "ftu": ftu_metric(clf, test, protected),
        "dp": dp_metric(clf, test, protected),
    }
    # equal sample sizes keep the two k-NN radius sets comparable
    m = min(model_data.n_rows, synth.n_rows)
    metrics["precision"], metrics["recall"] = precision_recall(model_data.take(slice(0, m)), synth.take(slice(0, m)), config.k)
    diag = {"ftu_max": ftu_metric(clf, test, protected, aggregate="max"),
            "corr_error": _corr_error(model_data, synth),
            "protected_modelled": protected_in_model}
    return metrics, diag


def run_unit(config: ExperimentConfig, repeat: int, cell: dict, out_dir: Path | None) -> dict:
    """Fit once and score every variant for one (cell, repeat) pair.

    ``cell`` may carry ``beta`` (bias level), ``mode``/``count`` (DAG
    perturbation) and ``pr`` (drop the protected column before fitting).
    """
    seed = config.seed + repeat
    t0 = time.perf_counter()
    full, dag = _source(config, seed)
    if config.drop:
        full = full.drop(config.drop)
        dag = drop_nodes(dag, config.drop)
    for name in (config.protected, config.target):
        if name not in dag:
            raise ConfigError(f"column {name!r} is not in the graph")
        if dag.kind(name) != BINARY:
            raise ConfigError(f"column {name!r} must be binary")
    n_hold = _holdout_size(config, full.n_rows)
    test = full.take(slice(0, n_hold))
    train = full.take(slice(n_hold, None))
    beta = cell.get("beta", config.bias)
    if beta > 0:
        train = inject_direct_bias(train, config.protected, config.target, config.disadvantaged, beta,
                                   _child_seed(seed, 1))
    if config.bias_edge and not dag.has_edge(config.protected, config.target):
        dag = dag.with_edges([(config.protected, config.target)])

    out = {"repeat": repeat, "seed": seed, "variants": {}}
    if "mode" in cell:
        guard = FairnessSpec("FTU", config.protected, config.target)
        try:
            dag = perturb_dag(dag, cell["mode"], cell["count"], guard, _child_seed(seed, 4))
        except InfeasiblePerturbationError as exc:
            return {**out, "status": "skipped", "reason": str(exc)}
        out["edges"] = [list(e) for e in dag.sorted_edges()]

    pr = bool(cell.get("pr"))
    if pr:
        dag = drop_nodes(dag, [config.protected])
    model_data = train.select(dag.names)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.jsonl" if out_dir is not None else None
    model = fit(model_data, dag, config.train_config(_child_seed(seed, 2)), log_path=log_path)
    if out_dir is not None:
        save(model, out_dir / "model.cfgm")
    out["model_fingerprint"] = model.fingerprint()
    n_synth = config.synth_rows or model_data.n_rows

    variants = [PR_VARIANT] if pr else list(config.variants)
    # every variant shares one noise draw, so they differ only through removed edges
    gen_seed = _child_seed(seed, 3)
    for variant in variants:
        if variant in (NO_DEBIAS, PR_VARIANT):
            removed = EdgeRemovalSet()
        else:
            spec = config.spec_for(variant)
            spec.validate_against(dag)
            removed = edges_to_remove(dag, spec)
        synth = generate(model, n_synth, removed, _surrogate(config, removed), gen_seed)
        if out_dir is not None and config.save_synthetic:
            synth.to_csv(out_dir / f"synthetic_{variant}.csv")
        metrics, diag = _score(config, model_data, synth, test, not pr, seed)
        diag["removed"] = [list(e) for e in removed]
        out["variants"][variant] = {"metrics": metrics, "diagnostics": diag}
    out["status"] = "ok"
    out["seconds"] = time.perf_counter() - t0
    return out


def _unit_worker(args):
    config_dict, repeat, cell, out_dir = args
    config = ExperimentConfig.from_dict(config_dict)
    try:
        return run_unit(config, repeat, cell, Path(out_dir) if out_dir else None)
    except Exception as exc:  # recorded per unit; the reduce step reports it
        return {"repeat": repeat, "seed": config.seed + repeat, "status": "failed",
                "reason": f"{type(exc).__name__}: {exc}", "traceback": traceback.format_exc(), "variants": {}}


# -- results ---------------------------------------------------------------

def cell_label(cell: dict) -> str:
    if not cell:
        return "base"
    parts = []
    for k in sorted(cell):
        v = cell[k]
        parts.append(f"{k}_{v:g}" if isinstance(v, float) else f"{k}_{v}")
    return "-".join(parts)


@dataclass
class CellResult:
    cell: dict
    reports: dict  # variant -> EvalReport
    skipped: list = field(default_factory=list)  # [{"repeat", "reason"}]
    failed: list = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.skipped and not self.failed

    def to_dict(self) -> dict:
        return {"cell": self.cell, "label": cell_label(self.cell),
                "variants": {v: r.to_dict() for v, r in sorted(self.reports.items())},
                "skipped": self.skipped, "failed": [{k: f[k] for k in ("repeat", "reason")} for f in self.failed]}


@dataclass
class ExperimentResult:
    kind: str
    config: ExperimentConfig
    cells: list
    timings: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return all(c.complete for c in self.cells)

    def cell(self, **match) -> CellResult:
        for c in self.cells:
            if all(c.cell.get(k) == v for k, v in match.items()):
                return c
        raise KeyError(f"no cell matching {match}")

    def report(self, variant: str, **match) -> EvalReport:
        return self.cell(**match).reports[variant]

    @property
    def reports(self) -> dict:
        """Variant reports of the only cell (plain runs and baselines)."""
        if len(self.cells) != 1:
            raise ValueError("experiment has several cells; use report(variant, **cell)")
        return self.cells[0].reports

    def to_dict(self) -> dict:
        return {"kind": self.kind, "name": self.config.name,
                "config_fingerprint": self.config.fingerprint(),
                "complete": self.complete, "summary": self.summary,
                "cells": [c.to_dict() for c in self.cells]}

    def tidy(self) -> pd.DataFrame:
        rows = []
        for c in self.cells:
            for variant, rep in sorted(c.reports.items()):
                for run, seed in zip(rep.runs, rep.seeds):
                    for metric in METRICS:
                        if metric in run:
                            rows.append({"experiment": self.config.name, "cell": cell_label(c.cell),
                                         **{k: c.cell.get(k) for k in ("beta", "mode", "count")},
                                         "variant": variant, "seed": seed, "metric": metric, "value": run[metric]})
        cols = ["experiment", "cell", "beta", "mode", "count", "variant", "seed", "metric", "value"]
        return pd.DataFrame(rows, columns=cols)

    def write(self, run_dir: Path) -> None:
        run_dir.mkdir(parents=True, exist_ok=True)
        self.config.save(run_dir / "config.json")
        (run_dir / "report.json").write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        self.tidy().to_csv(run_dir / "tidy-metrics.csv", index=False, float_format="%.17g")
        (run_dir / "timings.json").write_text(json.dumps(self.timings, indent=2, sort_keys=True) + "\n")


def _execute(kind: str, config: ExperimentConfig, cells: list[dict], write: bool = True) -> ExperimentResult:
    run_dir = config.run_dir()
    jobs = []
    for cell in cells:
        for r in range(config.repeats):
            out_dir = run_dir / cell_label(cell) / f"repeat_{r}" if write else None
            jobs.append((config.to_dict(), r, cell, str(out_dir) if out_dir else None))
    t0 = time.perf_counter()
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outputs = list(pool.map(_unit_worker, jobs))
    else:
        outputs = [_unit_worker(j) for j in jobs]

    fp = config.fingerprint()
    results, timings = [], {}
    it = iter(outputs)
    for cell in cells:
        variants = [PR_VARIANT] if cell.get("pr") else list(config.variants)
        runs = {v: [] for v in variants}
        seeds = {v: [] for v in variants}
        diags = {v: [] for v in variants}
        skipped, failed = [], []
        for _ in range(config.repeats):
            unit = next(it)
            timings[f"{cell_label(cell)}/repeat_{unit['repeat']}"] = unit.get("seconds")
            if unit["status"] == "skipped":
                skipped.append({"repeat": unit["repeat"], "reason": unit["reason"]})
                continue
            if unit["status"] == "failed":
                failed.append(unit)
                continue
            for v in variants:
                res = unit["variants"][v]
                runs[v].append(res["metrics"])
                seeds[v].append(unit["seed"])
                diags[v].append({**res["diagnostics"], "model_fingerprint": unit["model_fingerprint"],
                                 **({"edges": unit["edges"]} if "edges" in unit else {})})
        reports = {v: EvalReport(v, runs[v], seeds[v], fp, diags[v]) for v in variants}
        results.append(CellResult(cell, reports, skipped, failed))
    timings["total"] = time.perf_counter() - t0
    result = ExperimentResult(kind, config, results, timings)
    return result


def _finish(result: ExperimentResult, write: bool) -> ExperimentResult:
    if write:
        result.write(result.config.run_dir())
    return result


def _raise_failures(result: ExperimentResult) -> None:
    for c in result.cells:
        for f in c.failed:
            raise RunError(f"{result.kind} cell {cell_label(c.cell)!r}, repeat {f['repeat']} "
                           f"(seed {f['seed']}): {f['reason']}")


# -- experiments -----------------------------------------------------------

def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Repeated fit / debias / score at the configured bias level."""
    result = _finish(_execute("experiment", config, [{}], write), write)
    _raise_failures(result)
    return result


def trend(result: ExperimentResult, variant: str, metric: str) -> float:
    """Spearman correlation of the per-level mean of ``metric`` against bias level."""
    betas, means = [], []
    for c in result.cells:
        if "beta" in c.cell and variant in c.reports and c.reports[variant].n_runs:
            betas.append(c.cell["beta"])
            means.append(c.reports[variant].mean(metric))
    if len(betas) < 2:
        return float("nan")
    return float(spearmanr(betas, means).statistic)


def sweep_bias(config: ExperimentConfig, betas=None, repeats: int | None = None, write: bool = True,
               kind: str = "sweep") -> ExperimentResult:
    """Every bias level reuses the same repeat seeds, so levels differ only in the injection."""
    if betas is not None:
        config = replace(config, betas=tuple(betas))
    if repeats is not None:
        config = replace(config, repeats=repeats)
    cells = [{"beta": float(b)} for b in config.betas]
    result = _execute(kind, config, cells, write)
    result.summary = {v: {"ftu_trend": trend(result, v, "ftu")} for v in config.variants}
    return _finish(result, write)


def run_hidden_confounder(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """A bias sweep with ``config.drop`` removed from both the data and the graph."""
    dag = _graph(config)
    unknown = sorted(set(config.drop) - set(dag.names))
    if unknown:
        raise ConfigError(f"drop list names columns absent from the data: {unknown}")
    return sweep_bias(config, write=write, kind="confounder")


def run_ablation(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Fit on perturbed graphs; ``repeats`` doubles as the number of perturbation seeds.

    An unperturbed cell comes first as the reference for data-quality drift.
    """
    cells = [{}] + [{"mode": m, "count": c} for m in config.perturb_modes for c in range(1, config.perturb_max + 1)]
    result = _execute("ablation", config, cells, write)
    base = result.cells[0]
    summary = {}
    for c in result.cells[1:]:
        entry = {}
        for v, rep in c.reports.items():
            if rep.n_runs and base.reports[v].n_runs:
                ce = np.mean([d["corr_error"] for d in rep.diagnostics])
                entry[v] = {"ftu_max_over_runs": float(rep.values("ftu").max()),
                            "corr_error": float(ce),
                            "corr_error_baseline": float(np.mean([d["corr_error"] for d in base.reports[v].diagnostics]))}
        summary[cell_label(c.cell)] = entry
    result.summary = summary
    return _finish(result, write)


def run_baseline_pr(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Protected-removal baseline next to the configured variants, on the same seeds."""
    result = _execute("baseline-pr", config, [{}, {"pr": True}], write)
    return _finish(result, write)

"""Ground-truth structural equation models used as oracles.

Continuous nodes are linear-Gaussian, ``x = b + w.pa + sigma * z``. Binary
nodes are logistic, ``x = 1[Phi(z) < sigmoid(b + w.pa)]``. Every node owns one
standard normal noise column, drawn up front in node order, so removing an
edge never reshuffles the noise of unrelated columns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
from scipy.special import expit, ndtr

from causalfair.graph import CausalDag, EdgeRemovalSet, GraphError, topological_order
from causalfair.surrogate import (
    SurrogatePolicy, edge_rng, noise_rng, resolve, seed_entropy, substitute,
)
from causalfair.table import BINARY, CONTINUOUS, SchemaError, Table


class SemError(ValueError):
    pass


@dataclass(frozen=True)
class Mechanism:
    weights: dict = field(default_factory=dict)
    intercept: float = 0.0
    sigma: float | None = None  # continuous nodes only

    def linear_part(self, parents: dict) -> np.ndarray | float:
        out = self.intercept
        for name, w in sorted(self.weights.items()):
            out = out + w * parents[name]
        return out

    def apply(self, kind: str, parents: dict, z: np.ndarray) -> np.ndarray:
        eta = self.linear_part(parents)
        if kind == CONTINUOUS:
            return eta + self.sigma * z
        return (ndtr(z) < expit(eta)).astype(np.float64)

    def to_dict(self, kind: str) -> dict:
        out = {"type": "linear" if kind == CONTINUOUS else "logistic",
               "weights": dict(self.weights), "intercept": self.intercept}
        if kind == CONTINUOUS:
            out["sigma"] = self.sigma
        return out


SEM_SCHEMA = {
    "type": "object",
    "required": ["dag", "mechanisms"],
    "additionalProperties": False,
    "properties": {
        "dag": {"type": "object"},
        "description": {"type": "string"},
        "mechanisms": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["type", "weights", "intercept"],
                "additionalProperties": False,
                "properties": {
                    "type": {"enum": ["linear", "logistic"]},
                    "weights": {"type": "object", "additionalProperties": {"type": "number"}},
                    "intercept": {"type": "number"},
                    "sigma": {"type": "number"},
                },
            },
        },
    },
}


class SemSpec:
    def __init__(self, dag: CausalDag, mechanisms: dict, description: str = ""):
        self.dag = dag
        self.mechanisms = dict(mechanisms)
        self.description = description
        missing = set(dag.names) - set(self.mechanisms)
        extra = set(self.mechanisms) - set(dag.names)
        if missing or extra:
            raise SemError(f"mechanisms must cover DAG nodes exactly (missing {sorted(missing)}, extra {sorted(extra)})")
        for name in dag.names:
            m = self.mechanisms[name]
            if set(m.weights) != set(dag.parents(name)):
                raise SemError(
                    f"node {name!r}: mechanism parents {sorted(m.weights)} differ from DAG parents {sorted(dag.parents(name))}"
                )
            if dag.kind(name) == CONTINUOUS:
                if m.sigma is None or not m.sigma > 0:
                    raise SemError(f"node {name!r}: continuous mechanism needs sigma > 0")
            elif m.sigma is not None:
                raise SemError(f"node {name!r}: binary mechanism takes no sigma")

    def to_dict(self) -> dict:
        out = {"dag": self.dag.to_dict(),
               "mechanisms": {n: self.mechanisms[n].to_dict(self.dag.kind(n)) for n in self.dag.names}}
        if self.description:
            out["description"] = self.description
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "SemSpec":
        try:
            jsonschema.validate(obj, SEM_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise SemError(f"invalid SEM document: {exc.message}") from None
        dag = CausalDag.from_dict(obj["dag"])
        mechs = {}
        for name, m in obj["mechanisms"].items():
            if name not in dag:
                raise SemError(f"mechanism for unknown node {name!r}")
            want = "linear" if dag.kind(name) == CONTINUOUS else "logistic"
            if m["type"] != want:
                raise SemError(f"node {name!r} is {dag.kind(name)} and needs a {want} mechanism")
            mechs[name] = Mechanism(dict(m["weights"]), float(m["intercept"]), m.get("sigma"))
        return cls(dag, mechs, obj.get("description", ""))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "SemSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_dag(self, dag: CausalDag) -> "SemSpec":
        return SemSpec(dag, {n: self.mechanisms[n] for n in dag.names}, self.description)


def _draw(sem: SemSpec, n: int, seed, removed: EdgeRemovalSet, policy: SurrogatePolicy | None):
    if n < 1:
        raise ValueError("n must be >= 1")
    dag = sem.dag
    entropy = seed_entropy(seed)
    policy = resolve(policy, removed, dag)
    Z = noise_rng(entropy).standard_normal((n, len(dag)))
    cols: dict[str, np.ndarray] = {}
    for name in topological_order(dag):
        j = dag.index(name)
        inputs = {}
        for p in dag.parents(name):
            if (p, name) in removed:
                inputs[p] = substitute(policy[(p, name)], cols[p], edge_rng(entropy, dag.index(p), j), float)
            else:
                inputs[p] = cols[p]
        cols[name] = sem.mechanisms[name].apply(dag.kind(name), inputs, Z[:, j])
    return Table(dag.schema, np.column_stack([cols[n] for n in dag.names]))


def sample(sem: SemSpec, n: int, seed) -> Table:
    """Observational draw of ``n`` rows by ancestral sampling."""
    return _draw(sem, n, seed, EdgeRemovalSet(), None)


def interventional_sample(sem: SemSpec, removed: EdgeRemovalSet, policy: SurrogatePolicy | None, n: int, seed) -> Table:
    """Ancestral sampling where each removed edge feeds its child a surrogate.

    The parent column itself keeps its sampled values; only the child's
    mechanism sees the substitute.
    """
    return _draw(sem, n, seed, removed, policy)


def inject_direct_bias(table: Table, protected: str, target: str, disadvantaged, beta: float, seed) -> Table:
    """Deny positives in the disadvantaged group, each with probability ``beta``."""
    if table.kind(target) != BINARY:
        raise SchemaError(f"target {target!r} must be binary to inject bias")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    rng = np.random.default_rng(seed_entropy(seed))
    flip = rng.random(table.n_rows) < beta
    y = table.column(target).copy()
    hit = (table.column(protected) == disadvantaged) & (y == 1.0) & flip
    y[hit] = 0.0
    return table.with_column(target, y)


def load_builtin(name: str) -> SemSpec:
    """Bundled fixture SEMs: ``credit`` and ``linear6``."""
    path = Path(__file__).parent / "data" / f"{name}_sem.json"
    if not path.exists():
        raise GraphError(f"no bundled SEM named {name!r}")
    return SemSpec.load(path)

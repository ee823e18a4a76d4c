"""Downstream-classifier fairness and synthetic-data quality metrics."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import rankdata
from sklearn.exceptions import ConvergenceWarning
from sklearn.neural_network import MLPClassifier
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from causalfair import kernels
from causalfair.table import BINARY, SchemaError, Table

METRICS = ("precision", "recall", "auroc", "ftu", "dp")


class DegenerateLabelError(ValueError):
    pass


class MetricError(ValueError):
    pass


class Downstream:
    """Fitted classifier over named feature columns.

    ``predict_proba`` takes a ``Table`` (features picked by name) or a
    matrix whose columns already follow ``features``.
    """

    def __init__(self, features, target, model):
        self.features = list(features)
        self.target = target
        self.model = model

    def _matrix(self, data):
        if isinstance(data, Table):
            return data.select(self.features).values
        X = np.asarray(data, dtype=np.float64)
        return X[None, :] if X.ndim == 1 else X

    def predict_proba(self, data) -> np.ndarray:
        return self.model.predict_proba(self._matrix(data))[:, 1]


def train_downstream(train: Table, target: str, seed: int = 0, exclude=(), max_iter: int = 200) -> Downstream:
    """One hidden layer of 100 rectified units, cross-entropy, adaptive moments at rate 0.001.

    Features are standardized inside the model, so callers pass raw values.
    """
    if train.kind(target) != BINARY:
        raise SchemaError(f"target {target!r} must be binary")
    y = train.column(target)
    if np.unique(y).size < 2:
        raise DegenerateLabelError(f"target {target!r} holds a single class")
    features = [c for c in train.names if c != target and c not in set(exclude)]
    model = make_pipeline(
        StandardScaler(),
        MLPClassifier(hidden_layer_sizes=(100,), activation="relu", solver="adam",
                      learning_rate_init=0.001, max_iter=max_iter, random_state=seed),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model.fit(train.select(features).values, y.astype(int))
    return Downstream(features, target, model)


def _check_binary(table: Table, col: str):
    if col not in table:
        raise MetricError(f"column {col!r} absent from evaluation table")
    if table.kind(col) != BINARY:
        raise MetricError(f"column {col!r} must be binary")


def ftu_gaps(classifier, eval_table: Table, protected: str) -> np.ndarray:
    """Per-row ``|p(A set to 0) - p(A set to 1)|`` with everything else fixed."""
    _check_binary(eval_table, protected)
    n = eval_table.n_rows
    p0 = classifier.predict_proba(eval_table.with_column(protected, np.zeros(n)))
    p1 = classifier.predict_proba(eval_table.with_column(protected, np.ones(n)))
    return np.abs(np.asarray(p0, dtype=np.float64) - np.asarray(p1, dtype=np.float64))


def ftu_metric(classifier, eval_table: Table, protected: str, aggregate: str = "mean") -> float:
    gaps = ftu_gaps(classifier, eval_table, protected)
    if aggregate == "mean":
        return float(gaps.mean())
    if aggregate == "max":
        return float(gaps.max())
    raise ValueError(f"unknown aggregate {aggregate!r}")


def dp_metric(classifier, eval_table: Table, protected: str, threshold: float = 0.5) -> float:
    """Gap in positive-prediction rate between the two protected groups."""
    _check_binary(eval_table, protected)
    a = eval_table.column(protected)
    if not (a == 0).any() or not (a == 1).any():
        raise MetricError(f"both groups of {protected!r} must be present")
    yhat = np.asarray(classifier.predict_proba(eval_table)) >= threshold
    return float(abs(yhat[a == 0].mean() - yhat[a == 1].mean()))


def auroc_score(labels, scores) -> float:
    """Mann-Whitney area under the ROC curve; tied scores count one half."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    pos = labels == 1
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0:
        raise MetricError("AUROC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def auroc(classifier, labeled_table: Table, target: str) -> float:
    _check_binary(labeled_table, target)
    return auroc_score(labeled_table.column(target), classifier.predict_proba(labeled_table))


def _knn_radii(points: np.ndarray, k: int) -> np.ndarray:
    # k + 1 because each point is its own nearest neighbour
    dist, _ = cKDTree(points).query(points, k=k + 1)
    return dist[:, -1]


def precision_recall(real: Table, synth: Table, k: int = 5) -> tuple[float, float]:
    """k-NN manifold precision and recall.

    Precision is the share of synthetic rows inside the k-NN ball of some
    real row; recall swaps the roles. Columns are standardized with the real
    table's statistics before Euclidean distances are taken.
    """
    if real.names != synth.names:
        raise SchemaError(f"schemas differ: {real.names} vs {synth.names}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= real.n_rows or k >= synth.n_rows:
        raise ValueError(f"k={k} must be smaller than both table sizes ({real.n_rows}, {synth.n_rows})")
    mu = real.values.mean(axis=0)
    sd = real.values.std(axis=0)
    sd[sd == 0] = 1.0
    R = (real.values - mu) / sd
    S = (synth.values - mu) / sd
    precision = kernels.knn_coverage(R, _knn_radii(R, k), S).mean()
    recall = kernels.knn_coverage(S, _knn_radii(S, k), R).mean()
    return float(precision), float(recall)


@dataclass
class EvalReport:
    """Metric summary for one variant over repeated runs."""

    variant: str
    runs: list = field(default_factory=list)  # one dict of metric values per run
    seeds: list = field(default_factory=list)
    config_fingerprint: str = ""
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        for run in self.runs:
            for name, val in run.items():
                if not (0.0 <= val <= 1.0):
                    raise MetricError(f"{self.variant}: metric {name}={val} outside [0, 1]")

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    def values(self, metric: str) -> np.ndarray:
        return np.array([r[metric] for r in self.runs if metric in r], dtype=np.float64)

    def mean(self, metric: str) -> float:
        v = self.values(metric)
        return float(v.mean()) if v.size else float("nan")

    def std(self, metric: str) -> float:
        v = self.values(metric)
        return float(v.std()) if v.size else float("nan")

    def __getattr__(self, name):
        if name in METRICS:
            return self.mean(name)
        raise AttributeError(name)

    def summary(self) -> dict:
        names = [m for m in METRICS if self.values(m).size]
        return {m: {"mean": self.mean(m), "std": self.std(m)} for m in names}

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "n_runs": self.n_runs,
            "metrics": self.summary(),
            "runs": self.runs,
            "seeds": self.seeds,
            "config_fingerprint": self.config_fingerprint,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "EvalReport":
        return cls(obj["variant"], obj["runs"], obj["seeds"], obj["config_fingerprint"], obj.get("diagnostics", []))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text()))

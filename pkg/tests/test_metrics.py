import numpy as np
import pytest
from scipy.special import expit

from causalfair.metrics import (
    DegenerateLabelError, EvalReport, MetricError, auroc, auroc_score, dp_metric, ftu_gaps, ftu_metric,
    precision_recall, train_downstream,
)
from causalfair.table import Column, Table


class FnClassifier:
    """Stand-in classifier computing a probability from named columns."""

    def __init__(self, fn):
        self.fn = fn

    def predict_proba(self, table):
        return np.asarray(self.fn(table), dtype=np.float64)


def toy(n=400, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, n).astype(float)
    x = rng.normal(size=n)
    y = (x + 0.5 * a > 0.2).astype(float)
    return Table([Column("A", "binary"), Column("X", "continuous"), Column("Y", "binary")], np.column_stack([a, x, y]))


# -- downstream classifier ---------------------------------------------------

def test_separable_training_accuracy():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(600, 2))
    y = (X[:, 0] - X[:, 1] > 0).astype(float)
    t = Table([Column("u", "continuous"), Column("v", "continuous"), Column("y", "binary")], np.column_stack([X, y]))
    clf = train_downstream(t, "y", seed=0)
    acc = ((clf.predict_proba(t) >= 0.5) == (y == 1)).mean()
    assert acc > 0.95


def test_coin_flip_auroc_near_half():
    rng = np.random.default_rng(2)
    n = 4000
    X = rng.normal(size=(n, 3))
    y = rng.integers(0, 2, n).astype(float)
    schema = [Column(f"x{i}", "continuous") for i in range(3)] + [Column("y", "binary")]
    t = Table(schema, np.column_stack([X, y]))
    clf = train_downstream(t.take(slice(0, 2000)), "y", seed=0)
    assert abs(auroc(clf, t.take(slice(2000, None)), "y") - 0.5) < 0.05


def test_downstream_seeded():
    t = toy()
    a = train_downstream(t, "Y", seed=3).predict_proba(t)
    b = train_downstream(t, "Y", seed=3).predict_proba(t)
    assert np.array_equal(a, b)


def test_single_class_target():
    t = toy()
    t = t.with_column("Y", np.zeros(t.n_rows))
    with pytest.raises(DegenerateLabelError):
        train_downstream(t, "Y")


# -- FTU ---------------------------------------------------------------------

def test_ftu_ignoring_protected_is_zero():
    clf = FnClassifier(lambda t: expit(t.column("X")))
    assert ftu_metric(clf, toy(), "A") == 0.0


def test_ftu_identity_on_protected_is_one():
    clf = FnClassifier(lambda t: t.column("A"))
    assert ftu_metric(clf, toy(), "A") == 1.0


def test_ftu_logistic_closed_form():
    w_a, w_x, b = 1.3, -0.7, 0.2
    clf = FnClassifier(lambda t: expit(b + w_x * t.column("X") + w_a * t.column("A")))
    t = toy()
    z = b + w_x * t.column("X")
    expected = np.mean(np.abs(expit(z + w_a) - expit(z)))
    assert abs(ftu_metric(clf, t, "A") - expected) < 1e-9
    assert ftu_metric(clf, t, "A", aggregate="max") == pytest.approx(ftu_gaps(clf, t, "A").max())


def test_ftu_missing_column():
    with pytest.raises(MetricError):
        ftu_metric(FnClassifier(lambda t: np.zeros(t.n_rows)), toy().drop(["A"]), "A")


# -- DP ----------------------------------------------------------------------

def test_dp_constant_and_identity():
    t = toy()
    assert dp_metric(FnClassifier(lambda t: np.full(t.n_rows, 0.9)), t, "A") == 0.0
    assert dp_metric(FnClassifier(lambda t: t.column("A")), t, "A") == 1.0


def test_dp_hand_table():
    # group 0: 7 of 10 predicted positive; group 1: 4 of 10
    a = np.array([0] * 10 + [1] * 10, dtype=float)
    score = np.array([0.9] * 7 + [0.1] * 3 + [0.6] * 4 + [0.2] * 6)
    t = Table([Column("A", "binary"), Column("s", "continuous")], np.column_stack([a, score]))
    assert dp_metric(FnClassifier(lambda t: t.column("s")), t, "A") == pytest.approx(0.3)


def test_dp_empty_group():
    t = toy()
    t = t.with_column("A", np.ones(t.n_rows))
    with pytest.raises(MetricError):
        dp_metric(FnClassifier(lambda t: t.column("X")), t, "A")


def test_metrics_row_order_invariant():
    t = toy(seed=4)
    clf = train_downstream(t, "Y", seed=0)
    shuffled = t.take(np.random.default_rng(0).permutation(t.n_rows))
    assert ftu_metric(clf, t, "A") == pytest.approx(ftu_metric(clf, shuffled, "A"), abs=1e-12)
    assert dp_metric(clf, t, "A") == dp_metric(clf, shuffled, "A")
    for m in (ftu_metric(clf, t, "A"), dp_metric(clf, t, "A")):
        assert 0.0 <= m <= 1.0


# -- AUROC -------------------------------------------------------------------

def test_auroc_examples():
    assert auroc_score([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0
    assert auroc_score([0, 0, 1, 1], [0.9, 0.8, 0.2, 0.1]) == 0.0
    assert auroc_score([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]) == pytest.approx(0.75)


def test_auroc_ties_and_pairwise_oracle():
    rng = np.random.default_rng(5)
    labels = rng.integers(0, 2, 300)
    scores = rng.integers(0, 10, 300) / 10.0
    pos, neg = scores[labels == 1], scores[labels == 0]
    pairs = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    assert auroc_score(labels, scores) == pytest.approx(pairs / (len(pos) * len(neg)))


def test_auroc_single_class():
    with pytest.raises(MetricError):
        auroc_score([1, 1, 1], [0.2, 0.3, 0.4])


# -- precision / recall --------------------------------------------------------

def _cloud(n, shift=0.0, seed=0):
    X = np.random.default_rng(seed).normal(size=(n, 3)) + shift
    return Table([Column(c, "continuous") for c in "abc"], X)


def test_pr_self_coverage():
    t = _cloud(500)
    for k in (1, 5, 20):
        assert precision_recall(t, t, k) == (1.0, 1.0)


def test_pr_disjoint_supports():
    real = _cloud(500)
    p, r = precision_recall(real, _cloud(500, shift=100.0, seed=1), 5)
    assert p < 0.01 and r < 0.01


def test_pr_three_collinear_points():
    t = Table([Column("x", "continuous"), Column("y", "continuous")], np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
    assert precision_recall(t, t, 1) == (1.0, 1.0)


def test_pr_k_too_large():
    t = _cloud(5)
    with pytest.raises(ValueError):
        precision_recall(t, t, 5)


def test_pr_brute_force_oracle():
    real, synth = _cloud(120, seed=2), _cloud(90, shift=0.7, seed=3)
    mu, sd = real.values.mean(0), real.values.std(0)
    R, S = (real.values - mu) / sd, (synth.values - mu) / sd

    def coverage(ref, query, k):
        d_ref = np.linalg.norm(ref[:, None] - ref[None], axis=2)
        radii = np.sort(d_ref, axis=1)[:, k]
        d = np.linalg.norm(query[:, None] - ref[None], axis=2)
        return (d <= radii[None, :]).any(axis=1).mean()

    p, r = precision_recall(real, synth, 4)
    assert p == pytest.approx(coverage(R, S, 4)) and r == pytest.approx(coverage(S, R, 4))


# -- report --------------------------------------------------------------------

def test_report_aggregates_and_round_trips(tmp_path):
    runs = [{"precision": 0.8, "recall": 0.7, "auroc": 0.75, "ftu": 0.01, "dp": 0.1},
            {"precision": 0.6, "recall": 0.9, "auroc": 0.65, "ftu": 0.03, "dp": 0.3}]
    rep = EvalReport("FTU", runs, [0, 1], "abc")
    assert rep.n_runs == 2 and rep.precision == pytest.approx(0.7) and rep.std("dp") == pytest.approx(0.1)
    rep.save(tmp_path / "r.json")
    again = EvalReport.load(tmp_path / "r.json")
    assert again.to_json() == rep.to_json()


def test_report_rejects_out_of_range():
    with pytest.raises(MetricError):
        EvalReport("ND", [{"auroc": 1.2}], [0])

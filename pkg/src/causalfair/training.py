"""Adversarial fitting of the causal generator against a whole-row discriminator."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from causalfair import kernels
from causalfair.generator import SLOPE, GeneratorModel, head_temperatures, init_params, logistic_shift
from causalfair.graph import CausalDag
from causalfair.table import BINARY, CONTINUOUS, SchemaError, Table


MIN_WIDTH = 16  # floor for the default width; 2d units starve very small graphs


class DegenerateColumnError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 1e-3
    discriminator_steps: int = 10
    hidden_layers: int = 2
    hidden_width: int | None = None  # None -> max(2 * number of columns, MIN_WIDTH)
    batch_size: int = 64
    l2: float = 1e-4
    seed: int = 0
    divergence_threshold: float = 1e-3
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    ema_decay: float = 0.999  # > 0 returns a moving average of generator weights; 0 disables
    straight_through: bool = True  # discriminator sees rounded binaries, gradients use the relaxed ones

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        for name in ("learning_rate", "discriminator_steps", "hidden_layers", "batch_size"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.hidden_width is not None and self.hidden_width < 1:
            raise ValueError("hidden_width must be positive")
        if self.l2 < 0 or self.divergence_threshold < 0:
            raise ValueError("l2 and divergence_threshold must be non-negative")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and 0 <= self.ema_decay < 1):
            raise ValueError("adam betas and ema_decay must lie in [0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def width_for(self, d: int) -> int:
        return self.hidden_width or max(2 * d, MIN_WIDTH)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown training options {sorted(unknown)}")
        return cls(**obj)


@dataclass(frozen=True)
class Stats:
    names: tuple
    kinds: tuple
    mean: np.ndarray
    std: np.ndarray


def preprocess(data: Table) -> tuple[Table, Stats]:
    """Standardize continuous columns; binary columns pass through."""
    X = data.values.copy()
    mean = np.zeros(X.shape[1])
    std = np.ones(X.shape[1])
    for j, col in enumerate(data.schema):
        if col.kind != CONTINUOUS:
            continue
        m, s = X[:, j].mean(), X[:, j].std()
        if not s > 0 or s < 1e-12 * max(1.0, abs(m)):
            raise DegenerateColumnError(f"continuous column {col.name!r} has zero variance")
        mean[j], std[j] = m, s
        X[:, j] = (X[:, j] - m) / s
    stats = Stats(tuple(data.names), tuple(c.kind for c in data.schema), mean, std)
    return Table(data.schema, X), stats


def invert(data: Table, stats: Stats) -> Table:
    if tuple(data.names) != stats.names:
        raise SchemaError("table columns do not match preprocessing statistics")
    return Table(data.schema, data.values * stats.std + stats.mean)


def align(data: Table, dag: CausalDag) -> Table:
    """Reorder ``data`` to DAG node order and adopt the DAG's column kinds."""
    cols, nodes = set(data.names), set(dag.names)
    if nodes - cols:
        raise SchemaError(f"DAG nodes missing from data: {sorted(nodes - cols)}")
    if cols - nodes:
        raise SchemaError(f"data columns not in the DAG: {sorted(cols - nodes)}")
    return Table(dag.schema, data.select(dag.names).values)


class _Adam:
    def __init__(self, params, lr, l2, decay_mask, betas):
        self.params = params
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.lr = lr
        self.l2 = [l2 if w else 0.0 for w in decay_mask]
        self.t = 0
        self.betas = betas

    def step(self, grads):
        self.t += 1
        for p, g, m, v, l2 in zip(self.params, grads, self.m, self.v, self.l2):
            kernels.adam_update(p, g, m, v, self.t, self.lr, l2, self.betas[0], self.betas[1], 1e-8)


def init_discriminator(d: int, width: int, hidden_layers: int, rng):
    sizes = [d] + [width] * hidden_layers + [1]
    Ws, bs = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(n_in)
        Ws.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        bs.append(rng.uniform(-bound, bound, size=n_out))
    return Ws, bs


def fit(data: Table, dag: CausalDag, config: TrainConfig = TrainConfig(), log_path=None) -> GeneratorModel:
    """Train sub-generators for every DAG node on ``data``.

    Each generator update follows ``discriminator_steps`` discriminator
    updates; one epoch is ``ceil(n / batch_size)`` generator updates. The
    per-epoch losses go to ``log_path`` as JSON lines when given.
    """
    data = align(data, dag)
    X, stats = preprocess(data)
    X = X.values
    n, d = X.shape
    width = config.width_for(d)
    ss = np.random.SeedSequence(config.seed)
    rng_g, rng_d, rng_batch, rng_noise = (np.random.default_rng(s) for s in ss.spawn(4))
    gp = init_params(d, width, config.hidden_layers, rng_g)
    Ws, bs = init_discriminator(d, width, config.hidden_layers, rng_d)
    mask = dag.parent_mask()
    tau = head_temperatures(dag)
    hard = bool(config.straight_through)
    order = np.array([dag.index(v) for v in _topo(dag)], dtype=np.int64)

    betas = (config.adam_beta1, config.adam_beta2)
    opt_g = _Adam(gp, config.learning_rate, config.l2, [True, False, True, False, True, False], betas)
    opt_d = _Adam(Ws + bs, config.learning_rate, config.l2, [True] * len(Ws) + [False] * len(bs), betas)

    B = min(config.batch_size, n)
    k = config.discriminator_steps
    steps = math.ceil(n / B)
    perm, ptr = rng_batch.permutation(n), 0
    history = []
    ema = [p.copy() for p in gp] if config.ema_decay > 0 else None
    log = open(log_path, "w") if log_path else None
    try:
        if log:
            log.write(json.dumps({"event": "start", "seed": config.seed, "rows": n, "columns": dag.names,
                                  "config": config.to_dict(), "backend": kernels.BACKEND}) + "\n")
        t0 = time.perf_counter()
        for epoch in range(config.epochs):
            d_sum = g_sum = 0.0
            for _ in range(steps):
                Zf = rng_noise.standard_normal((B * k, d))
                fake = kernels.gen_forward(gp, mask, order, Zf, logistic_shift(Zf), SLOPE, tau, hard)
                for s in range(k):
                    if ptr + B > n:
                        perm, ptr = rng_batch.permutation(n), 0
                    real = X[perm[ptr:ptr + B]]
                    ptr += B
                    loss_d, gW, gb = kernels.disc_grads(Ws, bs, real, fake[s * B:(s + 1) * B], SLOPE)
                    opt_d.step(gW + gb)
                    d_sum += loss_d
                Zg = rng_noise.standard_normal((B, d))
                loss_g, grads = kernels.gen_grads(gp, mask, order, Zg, logistic_shift(Zg), Ws, bs, SLOPE, tau,
                                                  hard)
                opt_g.step(grads)
                if ema is not None:
                    for e, p in zip(ema, gp):
                        e *= config.ema_decay
                        e += (1.0 - config.ema_decay) * p
                g_sum += loss_g
            rec = {"epoch": epoch + 1, "d_loss": d_sum / (steps * k), "g_loss": g_sum / steps,
                   "wall_time": round(time.perf_counter() - t0, 4)}
            history.append(rec)
            if log:
                log.write(json.dumps(rec) + "\n")
                log.flush()
            if not (np.isfinite(rec["d_loss"]) and np.isfinite(rec["g_loss"])):
                raise DivergenceError(f"non-finite loss at epoch {epoch + 1}: {rec}", history)
            if rec["d_loss"] < config.divergence_threshold:
                raise DivergenceError(
                    f"discriminator loss collapsed to {rec['d_loss']:.3g} (< {config.divergence_threshold}) "
                    f"over epoch {epoch + 1}; generator loss {rec['g_loss']:.3g}. "
                    "Try a lower learning rate, fewer discriminator steps or a larger l2 weight.",
                    history,
                )
    finally:
        if log:
            log.close()
    info = {
        "train_config": config.to_dict(),
        "rows": n,
        "losses": [[r["d_loss"], r["g_loss"]] for r in history],
    }
    return GeneratorModel(dag, stats.mean, stats.std, params=ema if ema is not None else gp, hidden_layers=config.hidden_layers, info=info)


def _topo(dag):
    from causalfair.graph import topological_order
    return topological_order(dag)


def read_log(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]

"""Sequential causal generator with inference-time edge removal.

Each node ``j`` has a sub-generator fed with its parents and one noise
column ``z_j``. Neural sub-generators share their first hidden layer (inputs
``[x * mask_j, z_j]``) and keep private deeper layers and a scalar head.
Binary nodes use a relaxed Bernoulli head: with head output ``o`` the score
is ``sigmoid((o - logit Phi(z_j)) / TEMPERATURE)``, which sits close to 0 or 1
and rounds to exactly ``1[o > logit Phi(z_j)]``, a Bernoulli draw with rate
``sigmoid(o)``. Generation runs in topological order in standardized space;
binary columns are thresholded at 0.5 only after the sweep, so children see
the relaxed scores the discriminator was trained against.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
from scipy.special import expit, logit, ndtr

from causalfair import kernels
from causalfair.graph import CausalDag, EdgeRemovalSet, topological_order
from causalfair.sem import SemSpec
from causalfair.surrogate import (
    FixedValue, MarginalSample, PolicyError, SurrogatePolicy, edge_rng, noise_rng, resolve, seed_entropy, substitute,
)
from causalfair.table import BINARY, CONTINUOUS, Table

__all__ = [
    "GeneratorModel", "MarginalSample", "FixedValue", "SurrogatePolicy", "PolicyError",
    "generate", "generate_node", "save", "load",
    "ModelFileError", "CorruptModelError", "IntegrityError", "VersionMismatchError",
]

SLOPE = 0.2
TEMPERATURE = 0.2  # relaxation of binary heads
MAGIC = b"CFGM"
FORMAT_VERSION = 1


class ModelFileError(ValueError):
    pass


class CorruptModelError(ModelFileError):
    pass


class IntegrityError(ModelFileError):
    pass


class VersionMismatchError(ModelFileError):
    pass


def param_shapes(d: int, width: int, hidden_layers: int) -> list[tuple]:
    npv = hidden_layers - 1
    return [(width, d + 1), (width,), (npv, d, width, width), (npv, d, width), (d, width), (d,)]


def head_temperatures(dag: CausalDag) -> np.ndarray:
    """Per-node head temperature: ``TEMPERATURE`` for binary nodes, 0 (linear) otherwise."""
    return np.array([TEMPERATURE if n.kind == BINARY else 0.0 for n in dag.nodes])


def logistic_shift(Z: np.ndarray) -> np.ndarray:
    """Map standard normal noise to standard logistic noise, ``logit(Phi(z))``."""
    p = np.clip(ndtr(Z), 1e-15, 1.0 - 1e-15)
    return logit(p)


def init_params(d: int, width: int, hidden_layers: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Uniform init with bounds ``1/sqrt(fan_in)``."""
    out = []
    fan_in = [d + 1, d + 1, width, width, width, width]
    for shape, fi in zip(param_shapes(d, width, hidden_layers), fan_in):
        bound = 1.0 / np.sqrt(fi)
        out.append(rng.uniform(-bound, bound, size=shape))
    return out


class GeneratorModel:
    """Trained (or oracle) sub-generators plus the statistics to undo standardization.

    ``mean``/``std`` hold per-column statistics in DAG node order; binary
    columns carry ``(0, 1)`` and are never rescaled.
    """

    def __init__(self, dag: CausalDag, mean, std, params=None, sem: SemSpec | None = None,
                 hidden_layers: int = 2, info: dict | None = None):
        self.dag = dag
        self.mean = np.asarray(mean, dtype=np.float64).copy()
        self.std = np.asarray(std, dtype=np.float64).copy()
        d = len(dag)
        if self.mean.shape != (d,) or self.std.shape != (d,):
            raise ValueError("preprocessing statistics must cover every column")
        if not np.all(self.std > 0):
            raise ValueError("standard deviations must be positive")
        for j, n in enumerate(dag.nodes):
            if n.kind == BINARY and (self.mean[j] != 0.0 or self.std[j] != 1.0):
                raise ValueError(f"binary column {n.name!r} must carry identity statistics")
        if (params is None) == (sem is None):
            raise ValueError("a model is either neural (params) or an oracle (sem)")
        if sem is not None and sem.dag != dag:
            raise ValueError("oracle SEM must share the model DAG")
        self.sem = sem
        self.hidden_layers = int(hidden_layers)
        self.info = dict(info or {})
        self.params = None
        if params is not None:
            width = np.asarray(params[0]).shape[0]
            want = param_shapes(d, width, self.hidden_layers)
            got = [np.shape(p) for p in params]
            if got != want:
                raise ValueError(f"parameter shapes {got} do not match arity for {d} nodes: {want}")
            self.params = [np.array(p, dtype=np.float64) for p in params]
            for p in self.params:
                p.flags.writeable = False
        self.mean.flags.writeable = False
        self.std.flags.writeable = False
        self._order = topological_order(dag)
        self._mask = dag.parent_mask()

    @property
    def kind(self) -> str:
        return "oracle" if self.sem is not None else "neural"

    @property
    def width(self) -> int | None:
        return None if self.params is None else self.params[0].shape[0]

    @classmethod
    def from_sem(cls, sem: SemSpec) -> "GeneratorModel":
        """Oracle model whose sub-generators are the SEM's own mechanisms."""
        d = len(sem.dag)
        return cls(sem.dag, np.zeros(d), np.ones(d), sem=sem)

    def order_indices(self) -> np.ndarray:
        return np.array([self.dag.index(n) for n in self._order], dtype=np.int64)

    def to_model_space(self, name: str, raw):
        j = self.dag.index(name)
        return (np.asarray(raw, dtype=np.float64) - self.mean[j]) / self.std[j]

    def to_raw(self, X: np.ndarray) -> np.ndarray:
        out = X * self.std + self.mean
        for j, n in enumerate(self.dag.nodes):
            if n.kind == BINARY:
                out[:, j] = (out[:, j] >= 0.5).astype(np.float64)
        return out

    def fingerprint(self) -> str:
        return hashlib.sha256(_serialize(self)).hexdigest()


def generate_node(model: GeneratorModel, node: str, parent_values: dict, substitutions: dict | None = None,
                  noise=None) -> np.ndarray:
    """Output of one sub-generator, in the model's standardized space.

    ``parent_values`` maps every parent to a column; ``substitutions`` maps
    some parents to replacement columns or scalars, which take precedence.
    """
    dag = model.dag
    j = dag.index(node)
    parents = dag.parents(node)
    noise = np.atleast_1d(np.asarray(noise, dtype=np.float64))
    if noise.ndim != 1:
        raise ValueError(f"noise for {node!r} must be one-dimensional")
    n = noise.shape[0]
    substitutions = substitutions or {}
    stray = (set(parent_values) | set(substitutions)) - set(parents)
    if stray:
        raise ValueError(f"{node!r} has no parent(s) {sorted(stray)}")
    cols = {}
    for p in parents:
        if p in substitutions:
            v = np.asarray(substitutions[p], dtype=np.float64)
            v = np.full(n, float(v)) if v.ndim == 0 else v
        elif p in parent_values:
            v = np.asarray(parent_values[p], dtype=np.float64)
        else:
            raise ValueError(f"missing value for parent {p!r} of {node!r}")
        if v.shape != (n,):
            raise ValueError(f"parent {p!r} of {node!r} has shape {v.shape}, expected ({n},)")
        cols[p] = v
    if model.sem is not None:
        return model.sem.mechanisms[node].apply(dag.kind(node), cols, noise)
    W_in, b_in, PW, Pb, W_out, b_out = model.params
    a = np.outer(noise, W_in[:, -1]) + b_in
    for p in parents:
        a += np.outer(cols[p], W_in[:, dag.index(p)])
    h = np.where(a > 0, a, SLOPE * a)
    for layer in range(PW.shape[0]):
        a = h @ PW[layer, j].T + Pb[layer, j]
        h = np.where(a > 0, a, SLOPE * a)
    out = h @ W_out[j] + b_out[j]
    if dag.kind(node) == BINARY:
        out = expit((out - logistic_shift(noise)) / TEMPERATURE)
    return out


def generate(model: GeneratorModel, n: int, removed: EdgeRemovalSet | None = None,
             policy: SurrogatePolicy | None = None, seed=None) -> Table:
    """Draw ``n`` synthetic rows, feeding surrogates along ``removed`` edges.

    ``policy=None`` resamples every removed parent from its generated
    marginal. Noise is drawn for all nodes up front, so columns that do not
    descend from a removed edge match the undebiased output bit for bit.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dag = model.dag
    removed = removed if removed is not None else EdgeRemovalSet()
    policy = resolve(policy, removed, dag)
    entropy = seed_entropy(seed)
    Z = noise_rng(entropy).standard_normal((n, len(dag)))
    X = np.zeros((n, len(dag)))
    for name in model._order:
        j = dag.index(name)
        subs = {}
        values = {}
        for p in dag.parents(name):
            i = dag.index(p)
            if (p, name) in removed:
                subs[p] = substitute(policy[(p, name)], X[:, i], edge_rng(entropy, i, j),
                                     lambda v, _p=p: float(model.to_model_space(_p, v)))
            else:
                values[p] = X[:, i]
        X[:, j] = generate_node(model, name, values, subs, Z[:, j])
    return Table(dag.schema, model.to_raw(X))


# -- model files ----------------------------------------------------------
#
# layout: MAGIC | u16 version | u32 header length | header JSON | sections
# The header lists each section's offset, length and sha256, plus the DAG
# fingerprint; the stats section repeats the fingerprint so a DAG swapped
# between files is caught.

def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _serialize(model: GeneratorModel) -> bytes:
    dag_fp = model.dag.fingerprint()
    sections = {
        "dag": _json_bytes(model.dag.to_dict()),
        "stats": _json_bytes({
            "dag_fingerprint": dag_fp,
            "columns": model.dag.names,
            "kinds": [n.kind for n in model.dag.nodes],
            "mean": [float(x).hex() for x in model.mean],
            "std": [float(x).hex() for x in model.std],
        }),
    }
    if model.params is not None:
        sections["weights"] = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in model.params)
        shapes = [list(p.shape) for p in model.params]
    else:
        sections["weights"] = b""
        sections["sem"] = _json_bytes(model.sem.to_dict())
        shapes = []
    table, offset = [], 0
    for name, blob in sections.items():
        table.append({"name": name, "offset": offset, "length": len(blob), "sha256": hashlib.sha256(blob).hexdigest()})
        offset += len(blob)
    header = _json_bytes({
        "format_version": FORMAT_VERSION,
        "model_kind": model.kind,
        "hidden_layers": model.hidden_layers,
        "weight_shapes": shapes,
        "dag_fingerprint": dag_fp,
        "info": model.info,
        "sections": table,
    })
    return MAGIC + struct.pack("<HI", FORMAT_VERSION, len(header)) + header + b"".join(sections.values())


def save(model: GeneratorModel, path) -> None:
    Path(path).write_bytes(_serialize(model))


def load(path) -> GeneratorModel:
    blob = Path(path).read_bytes()
    return loads(blob, source=str(path))


def loads(blob: bytes, source: str = "<bytes>") -> GeneratorModel:
    if len(blob) < 10 or blob[:4] != MAGIC:
        raise CorruptModelError(f"{source}: not a model file (bad magic or truncated header)")
    version, hlen = struct.unpack("<HI", blob[4:10])
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{source}: format version {version}, this build reads {FORMAT_VERSION}")
    if len(blob) < 10 + hlen:
        raise CorruptModelError(f"{source}: truncated header")
    try:
        header = json.loads(blob[10:10 + hlen])
    except ValueError:
        raise CorruptModelError(f"{source}: unreadable header") from None
    if header.get("format_version") != version:
        raise VersionMismatchError(f"{source}: header version disagrees with file prefix")
    body = blob[10 + hlen:]
    sections = {}
    end = 0
    for s in header["sections"]:
        chunk = body[s["offset"]:s["offset"] + s["length"]]
        if len(chunk) != s["length"]:
            raise CorruptModelError(f"{source}: section {s['name']!r} truncated")
        if hashlib.sha256(chunk).hexdigest() != s["sha256"]:
            raise CorruptModelError(f"{source}: checksum mismatch in section {s['name']!r}")
        sections[s["name"]] = chunk
        end = max(end, s["offset"] + s["length"])
    if len(body) != end:
        raise CorruptModelError(f"{source}: {len(body) - end} trailing bytes")

    dag = CausalDag.from_dict(json.loads(sections["dag"]))
    stats = json.loads(sections["stats"])
    fp = dag.fingerprint()
    if not (fp == header["dag_fingerprint"] == stats["dag_fingerprint"]):
        raise IntegrityError(f"{source}: DAG fingerprint differs between sections")
    if stats["columns"] != dag.names:
        raise IntegrityError(f"{source}: statistics columns do not match the DAG")
    mean = [float.fromhex(x) for x in stats["mean"]]
    std = [float.fromhex(x) for x in stats["std"]]
    if header["model_kind"] == "oracle":
        sem = SemSpec.from_dict(json.loads(sections["sem"]))
        if sem.dag != dag:
            raise IntegrityError(f"{source}: oracle SEM graph differs from the DAG section")
        return GeneratorModel(dag, mean, std, sem=sem, hidden_layers=header["hidden_layers"], info=header["info"])
    flat = np.frombuffer(sections["weights"], dtype="<f8")
    params, pos = [], 0
    for shape in header["weight_shapes"]:
        size = int(np.prod(shape))
        if pos + size > flat.size:
            raise CorruptModelError(f"{source}: weights section shorter than declared shapes")
        params.append(flat[pos:pos + size].reshape(shape).astype(np.float64))
        pos += size
    if pos != flat.size:
        raise CorruptModelError(f"{source}: weights section longer than declared shapes")
    return GeneratorModel(dag, mean, std, params=params, hidden_layers=header["hidden_layers"], info=header["info"])

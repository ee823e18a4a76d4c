"""What a child sees in place of a parent whose edge was removed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from causalfair.graph import CausalDag, EdgeRemovalSet
from causalfair.table import BINARY


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class MarginalSample:
    """Fresh draw per row from the parent's marginal, independent of the row."""

    def to_dict(self):
        return {"type": "marginal"}


@dataclass(frozen=True)
class FixedValue:
    """The same value for every row, in the parent's original units."""

    value: float

    def to_dict(self):
        return {"type": "fixed", "value": self.value}


def _entry_from_dict(obj):
    if obj.get("type") == "marginal":
        return MarginalSample()
    if obj.get("type") == "fixed" and "value" in obj:
        return FixedValue(float(obj["value"]))
    raise PolicyError(f"bad surrogate entry {obj!r}")


class SurrogatePolicy:
    """One surrogate rule per removed edge."""

    def __init__(self, entries: dict | None = None):
        self.entries = {tuple(e): v for e, v in (entries or {}).items()}
        for e, v in self.entries.items():
            if not isinstance(v, (MarginalSample, FixedValue)):
                raise PolicyError(f"edge {e}: unsupported surrogate {v!r}")

    @classmethod
    def uniform(cls, removed: EdgeRemovalSet, entry=MarginalSample()) -> "SurrogatePolicy":
        return cls({e: entry for e in removed})

    def __getitem__(self, edge):
        return self.entries[tuple(edge)]

    def __eq__(self, other):
        return isinstance(other, SurrogatePolicy) and self.entries == other.entries

    def check(self, removed: EdgeRemovalSet, dag: CausalDag) -> None:
        missing = sorted(removed.removed - set(self.entries))
        if missing:
            raise PolicyError(f"no surrogate policy for removed edge(s) {missing}")
        extra = sorted(set(self.entries) - removed.removed)
        if extra:
            raise PolicyError(f"surrogate policy names edges that are not removed: {extra}")
        for (p, c), v in self.entries.items():
            if isinstance(v, FixedValue):
                if not np.isfinite(v.value):
                    raise PolicyError(f"edge {p}->{c}: fixed value must be finite")
                if dag.kind(p) == BINARY and v.value not in (0.0, 1.0):
                    raise PolicyError(f"edge {p}->{c}: binary parent {p!r} needs a fixed value of 0 or 1")

    def to_dict(self) -> dict:
        return {"entries": [{"edge": list(e), **self.entries[e].to_dict()} for e in sorted(self.entries)]}

    @classmethod
    def from_dict(cls, obj: dict) -> "SurrogatePolicy":
        return cls({tuple(item["edge"]): _entry_from_dict(item) for item in obj.get("entries", [])})


def resolve(policy: SurrogatePolicy | None, removed: EdgeRemovalSet, dag: CausalDag) -> SurrogatePolicy:
    """``None`` means marginal resampling on every removed edge."""
    removed.validate_against(dag)
    if policy is None:
        policy = SurrogatePolicy.uniform(removed)
    policy.check(removed, dag)
    return policy


def edge_rng(entropy, i: int, j: int) -> np.random.Generator:
    # one stream per (parent, child) so surrogate draws never shift other columns
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(1, i, j)))


def noise_rng(entropy) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(0,)))


def seed_entropy(seed) -> int:
    """Integer entropy for a user seed; ``None`` draws one from the OS."""
    if seed is None:
        return int(np.random.SeedSequence().entropy)
    if isinstance(seed, (int, np.integer)) and seed >= 0:
        return int(seed)
    raise ValueError(f"seed must be a non-negative integer, got {seed!r}")


def substitute(entry, column: np.ndarray, rng: np.random.Generator, fixed) -> np.ndarray:
    """Surrogate values for one removed edge.

    ``column`` is the generated parent column; ``fixed`` maps a raw fixed
    value into the same space as ``column``.
    """
    n = column.shape[0]
    if isinstance(entry, FixedValue):
        return np.full(n, fixed(entry.value))
    return column[rng.integers(0, n, size=n)]

"""Typed numeric tables shared by the simulator, the generator and the metrics."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

CONTINUOUS = "continuous"
BINARY = "binary"
KINDS = (CONTINUOUS, BINARY)


class SchemaError(ValueError):
    """Raised when a table does not match its declared schema."""


@dataclass(frozen=True)
class Column:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")


class Table:
    """Immutable column-typed matrix of float64 values.

    Binary columns may only hold 0 and 1. Rows are observations, columns
    follow ``schema`` order.
    """

    __slots__ = ("schema", "values", "_index")

    def __init__(self, schema: Sequence[Column], values):
        schema = tuple(schema)
        names = [c.name for c in schema]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column names in schema: {names}")
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim == 1 and len(schema) == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[1] != len(schema):
            raise SchemaError(
                f"row width {arr.shape[-1] if arr.ndim else 0} does not match schema width {len(schema)}"
            )
        if not np.all(np.isfinite(arr)):
            raise SchemaError("table contains missing or non-finite values")
        for j, col in enumerate(schema):
            if col.kind == BINARY and not np.all((arr[:, j] == 0) | (arr[:, j] == 1)):
                raise SchemaError(f"binary column {col.name!r} holds values other than 0/1")
        arr.flags.writeable = False
        self.schema = schema
        self.values = arr
        self._index = {name: j for j, name in enumerate(names)}

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.schema]

    @property
    def kinds(self) -> dict[str, str]:
        return {c.name: c.kind for c in self.schema}

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def __len__(self):
        return self.n_rows

    def __contains__(self, name):
        return name in self._index

    def __repr__(self):
        return f"Table({self.n_rows} rows, columns={self.names})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"no column {name!r} in table with columns {self.names}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    def kind(self, name: str) -> str:
        return self.schema[self.index(name)].kind

    def select(self, names: Iterable[str]) -> "Table":
        names = list(names)
        idx = [self.index(n) for n in names]
        return Table([self.schema[i] for i in idx], self.values[:, idx])

    def drop(self, names: Iterable[str]) -> "Table":
        gone = set(names)
        missing = gone - set(self.names)
        if missing:
            raise KeyError(f"cannot drop unknown columns {sorted(missing)}")
        return self.select([n for n in self.names if n not in gone])

    def take(self, rows) -> "Table":
        return Table(self.schema, self.values[rows])

    def with_column(self, name: str, values) -> "Table":
        arr = self.values.copy()
        arr[:, self.index(name)] = values
        return Table(self.schema, arr)

    def equals(self, other: "Table") -> bool:
        return self.schema == other.schema and np.array_equal(self.values, other.values)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, columns=self.names)

    def to_csv(self, path) -> None:
        frame = self.to_frame()
        for c in self.schema:
            if c.kind == BINARY:
                frame[c.name] = frame[c.name].astype(np.int64)
        frame.to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, kinds: dict[str, str] | None = None) -> "Table":
        kinds = kinds or {}
        schema = [Column(str(name), kinds.get(str(name), _infer_kind(frame[name]))) for name in frame.columns]
        return cls(schema, frame.to_numpy(dtype=np.float64))

    @classmethod
    def read_csv(cls, path, schema: Sequence[Column] | None = None) -> "Table":
        """Load a headered CSV, validating it against ``schema`` when given.

        Errors name the offending row (1-based, header excluded) and column.
        """
        path = Path(path)
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        if schema is not None:
            expected = [c.name for c in schema]
            if list(frame.columns) != expected:
                raise SchemaError(f"{path}: header {list(frame.columns)} does not match schema {expected}")
        numeric = {}
        for name in frame.columns:
            raw = frame[name].str.strip()
            blank = raw == ""
            if blank.any():
                row = int(np.flatnonzero(blank.to_numpy())[0]) + 1
                raise SchemaError(f"{path}: missing value at row {row}, column {name!r}")
            try:
                # astype(float) parses exactly; pd.to_numeric can be off by an ulp
                numeric[name] = raw.astype(np.float64).to_numpy()
            except ValueError:
                bad = pd.to_numeric(raw, errors="coerce").isna().to_numpy()
                row = int(np.flatnonzero(bad)[0]) + 1
                raise SchemaError(f"{path}: non-numeric value {raw.iloc[row - 1]!r} at row {row}, column {name!r}") from None
        frame = pd.DataFrame(numeric, columns=frame.columns)
        if schema is None:
            return cls.from_frame(frame)
        for col in schema:
            if col.kind == BINARY:
                bad = ~np.isin(frame[col.name].to_numpy(), (0.0, 1.0))
                if bad.any():
                    row = int(np.flatnonzero(bad)[0]) + 1
                    raise SchemaError(f"{path}: non-binary value at row {row}, column {col.name!r}")
        return cls(schema, frame.to_numpy())


def _infer_kind(series: pd.Series) -> str:
    vals = np.unique(series.to_numpy(dtype=np.float64))
    return BINARY if np.all(np.isin(vals, (0.0, 1.0))) else CONTINUOUS

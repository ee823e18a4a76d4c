import numpy as np
import pandas as pd
import pytest

from causalfair.table import Column, SchemaError, Table

SCHEMA = [Column("age", "continuous"), Column("sex", "binary")]


def write(path, text):
    path.write_text(text)
    return path


def test_rejects_non_binary_and_non_finite():
    with pytest.raises(SchemaError, match="sex"):
        Table(SCHEMA, [[1.0, 2.0]])
    with pytest.raises(SchemaError, match="non-finite"):
        Table(SCHEMA, [[np.nan, 1.0]])
    with pytest.raises(SchemaError, match="duplicate"):
        Table([Column("a", "binary"), Column("a", "binary")], [[0, 1]])
    with pytest.raises(SchemaError, match="kind"):
        Column("x", "categorical")


def test_values_are_read_only_copies():
    src = np.array([[1.0, 0.0], [2.0, 1.0]])
    t = Table(SCHEMA, src)
    src[0, 0] = 99.0
    assert t.column("age")[0] == 1.0
    with pytest.raises(ValueError):
        t.values[0, 0] = 5.0


def test_select_drop_take():
    t = Table(SCHEMA, [[1.0, 0.0], [2.0, 1.0], [3.0, 1.0]])
    assert t.select(["sex", "age"]).names == ["sex", "age"]
    assert t.drop(["age"]).names == ["sex"]
    assert t.take([2, 0]).column("age").tolist() == [3.0, 1.0]
    with pytest.raises(KeyError):
        t.drop(["income"])
    with pytest.raises(KeyError, match="income"):
        t.column("income")


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    t = Table(SCHEMA, np.column_stack([rng.normal(size=50), rng.integers(0, 2, 50)]))
    t.to_csv(tmp_path / "t.csv")
    back = Table.read_csv(tmp_path / "t.csv", SCHEMA)
    assert back.equals(t)
    # binaries are written as integers
    assert pd.read_csv(tmp_path / "t.csv")["sex"].dtype == np.int64


def test_missing_value_names_row_and_column(tmp_path):
    p = write(tmp_path / "x.csv", "age,sex\n30,1\n,0\n")
    with pytest.raises(SchemaError, match=r"row 2, column 'age'"):
        Table.read_csv(p, SCHEMA)


def test_non_numeric_and_non_binary(tmp_path):
    with pytest.raises(SchemaError, match=r"'abc' at row 1"):
        Table.read_csv(write(tmp_path / "a.csv", "age,sex\nabc,1\n"), SCHEMA)
    with pytest.raises(SchemaError, match=r"non-binary value at row 2, column 'sex'"):
        Table.read_csv(write(tmp_path / "b.csv", "age,sex\n1,1\n2,3\n"), SCHEMA)


def test_header_mismatch(tmp_path):
    with pytest.raises(SchemaError, match="header"):
        Table.read_csv(write(tmp_path / "h.csv", "age,gender\n1,1\n"), SCHEMA)


def test_kind_inference():
    t = Table.from_frame(pd.DataFrame({"a": [0, 1, 1], "b": [0.5, 1, 2]}))
    assert t.kinds == {"a": "binary", "b": "continuous"}

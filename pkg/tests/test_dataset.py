import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carelab.dataset import (
    BinaryTarget,
    Categorical,
    Continuous,
    Dataset,
    DatasetError,
    StandardizeStats,
    infer_schema,
    kfold_split,
    load_csv,
    one_hot_encode,
    standardize,
    write_csv,
)


def small():
    rows = np.array([[0.5, 0.0], [-1.0, 2.0], [2.5, 1.0], [0.0, 0.0]])
    return Dataset(("a", "c"), (Continuous(), Categorical(("lo", "mid", "hi"))), rows, [0, 1, 1, 0], "y")


def test_invariants_reject_bad_tables():
    with pytest.raises(DatasetError, match="arity"):
        Dataset(("a",), (Continuous(), Continuous()), np.zeros((2, 2)), [0, 1])
    with pytest.raises(DatasetError, match="level index"):
        Dataset(("c",), (Categorical(("x", "y")),), [[0.0], [2.0]], [0, 1])
    with pytest.raises(DatasetError, match="binary"):
        Dataset(("a",), (Continuous(),), [[0.0], [1.0]], [0, 2])
    with pytest.raises(DatasetError, match="length"):
        Dataset(("a",), (Continuous(),), [[0.0], [1.0]], [0, 1, 1])


def test_rows_are_read_only():
    d = small()
    with pytest.raises(ValueError):
        d.rows[0, 0] = 9.0


def test_csv_round_trip_is_exact(tmp_path):
    d = small().replace(rows=np.array([[0.1 + 0.2, 0.0], [1e-300, 2.0], [-7.25, 1.0], [np.pi, 0.0]]))
    path = tmp_path / "d.csv"
    write_csv(d, path)
    back = load_csv(path, [Continuous(), Categorical(("lo", "mid", "hi")), BinaryTarget()], "y")
    assert back == d


def test_csv_errors_name_row_and_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,c,y\n1.0,lo,0\n2.0,top,1\n")
    schema = [Continuous(), Categorical(("lo", "hi")), BinaryTarget()]
    with pytest.raises(DatasetError, match=r"row 2, column 'c': unknown level 'top'"):
        load_csv(path, schema, "y")
    path.write_text("a,c,y\n1.0,lo,0\n2.0,hi,3\n")
    with pytest.raises(DatasetError, match="non-binary target at row 2"):
        load_csv(path, schema, "y")
    path.write_text("a,c,y\n,lo,0\n")
    with pytest.raises(DatasetError, match="empty cell"):
        load_csv(path, schema, "y")
    with pytest.raises(DatasetError, match="target column 'z'"):
        load_csv(path, schema, "z")


def test_infer_schema(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,c,y\n1.5,x,0\n2,z,1\n")
    kinds = infer_schema(path, "y")
    assert kinds == [Continuous(), Categorical(("x", "z")), BinaryTarget()]


def test_json_round_trip():
    d = small()
    assert Dataset.from_json(json.loads(d.dumps())) == d


def test_standardize_uses_population_std_and_train_stats():
    d = small()
    s, stats = standardize(d)
    col = s.column("a")
    assert abs(col.mean()) < 1e-12 and abs(col.std() - 1.0) < 1e-12
    # categorical column untouched
    assert np.array_equal(s.column("c"), d.column("c"))
    again, _ = standardize(d, StandardizeStats.from_json(stats.to_json()))
    assert again == s


def test_standardize_floors_constant_columns():
    d = Dataset(("a",), (Continuous(),), np.ones((3, 1)), [0, 1, 0])
    s, stats = standardize(d)
    assert stats.std == (1e-8,)
    assert np.all(s.rows == 0.0)


def test_one_hot_layout():
    enc = one_hot_encode(small())
    assert enc.names == ("a", "c=lo", "c=mid", "c=hi")
    assert enc.column_map == (0, 1, 1, 1)
    assert np.array_equal(enc.values[:, 1:].sum(axis=1), np.ones(4))
    assert enc.values[1, 3] == 1.0


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 60), k=st.integers(2, 10), seed=st.integers(0, 2**31))
def test_kfold_partitions_rows(n, k, seed):
    if k > n:
        return
    d = Dataset(("a",), (Continuous(),), np.arange(n, dtype=float)[:, None], np.zeros(n))
    folds = kfold_split(d, k, seed)
    tests = np.concatenate([te.column("a") for _, te in folds])
    assert sorted(tests) == list(range(n))
    sizes = [te.n for _, te in folds]
    assert max(sizes) - min(sizes) <= 1
    for tr, te in folds:
        assert tr.n + te.n == n
        assert not set(tr.column("a")) & set(te.column("a"))


def test_kfold_is_seeded():
    d = Dataset(("a",), (Continuous(),), np.arange(20.0)[:, None], np.zeros(20))
    a = [te.column("a").tolist() for _, te in kfold_split(d, 5, 3)]
    b = [te.column("a").tolist() for _, te in kfold_split(d, 5, 3)]
    c = [te.column("a").tolist() for _, te in kfold_split(d, 5, 4)]
    assert a == b and a != c

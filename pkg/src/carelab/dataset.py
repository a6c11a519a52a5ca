"""Tabular data model shared by every stage of the pipeline.

A :class:`Dataset` holds raw feature values (continuous reals, categorical
level indices) plus a binary target. Structure learning consumes it as-is;
model training consumes the standardized, one-hot encoded view produced by
:func:`standardize` and :func:`one_hot_encode`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Continuous",
    "Categorical",
    "BinaryTarget",
    "ColumnKind",
    "Dataset",
    "DatasetError",
    "EncodedMatrix",
    "StandardizeStats",
    "load_csv",
    "write_csv",
    "infer_schema",
    "standardize",
    "one_hot_encode",
    "kfold_split",
]

STD_FLOOR = 1e-8
MODES = ("train", "test", "none")


class DatasetError(ValueError):
    """Raised for malformed input tables."""


@dataclass(frozen=True)
class Continuous:
    pass


@dataclass(frozen=True)
class Categorical:
    levels: tuple[str, ...]

    def __post_init__(self):
        levels = tuple(str(v) for v in self.levels)
        if not levels:
            raise DatasetError("categorical column needs at least one level")
        if len(set(levels)) != len(levels):
            raise DatasetError(f"duplicate categorical levels in {levels}")
        object.__setattr__(self, "levels", levels)


@dataclass(frozen=True)
class BinaryTarget:
    pass


ColumnKind = Union[Continuous, Categorical, BinaryTarget]


def _kind_to_json(kind: ColumnKind) -> dict:
    if isinstance(kind, Categorical):
        return {"type": "categorical", "levels": list(kind.levels)}
    if isinstance(kind, BinaryTarget):
        return {"type": "binary_target"}
    return {"type": "continuous"}


def _kind_from_json(obj: dict) -> ColumnKind:
    kind = obj["type"]
    if kind == "categorical":
        return Categorical(tuple(obj["levels"]))
    if kind == "binary_target":
        return BinaryTarget()
    if kind == "continuous":
        return Continuous()
    raise DatasetError(f"unknown column type {kind!r}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature table plus binary target.

    ``names``/``kinds`` describe the feature columns only; the target column
    is carried separately as ``target`` under ``target_name``. ``target`` may
    be ``None`` for unlabeled tables (e.g. raw Bayesian-network samples that
    have not been binarized yet).
    """

    names: tuple[str, ...]
    kinds: tuple[ColumnKind, ...]
    rows: np.ndarray
    target: np.ndarray | None
    target_name: str | None = "y"
    meta: dict = field(default_factory=lambda: {"seed": None, "mode": "none"})

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        kinds = tuple(self.kinds)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "kinds", kinds)
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim == 1 and len(names) == 0:
            rows = rows.reshape(-1, 0)
        if rows.ndim != 2:
            raise DatasetError("rows must be a 2-D table")
        if len(names) != len(kinds) or rows.shape[1] != len(names):
            raise DatasetError(
                f"arity mismatch: {len(names)} names, {len(kinds)} kinds, {rows.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise DatasetError("duplicate column names")
        if rows.shape[0] < 1:
            raise DatasetError("dataset needs at least one row")
        for c, kind in enumerate(kinds):
            if isinstance(kind, BinaryTarget):
                raise DatasetError(f"feature column {names[c]!r} cannot be the binary target")
            if isinstance(kind, Categorical):
                col = rows[:, c]
                ok = (col == np.round(col)) & (col >= 0) & (col < len(kind.levels))
                if not ok.all():
                    bad = int(np.flatnonzero(~ok)[0])
                    raise DatasetError(f"invalid level index at row {bad}, column {names[c]!r}")
        object.__setattr__(self, "rows", _frozen(rows))
        if self.target is not None:
            target = np.asarray(self.target, dtype=float).ravel()
            if target.shape[0] != rows.shape[0]:
                raise DatasetError("target length must equal the number of rows")
            if not np.isin(target, (0.0, 1.0)).all():
                raise DatasetError("target must be binary (0/1)")
            object.__setattr__(self, "target", _frozen(target))
            if self.target_name in names:
                raise DatasetError(f"target name {self.target_name!r} clashes with a feature")
        meta = {"seed": None, "mode": "none", **dict(self.meta)}
        if meta["mode"] not in MODES:
            raise DatasetError(f"mode must be one of {MODES}")
        object.__setattr__(self, "meta", meta)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @property
    def y(self) -> np.ndarray:
        if self.target is None:
            raise DatasetError("dataset has no target")
        return self.target

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.names.index(name)]

    def is_discrete(self) -> list[bool]:
        return [isinstance(k, Categorical) for k in self.kinds]

    def take(self, idx: Sequence[int] | np.ndarray) -> Dataset:
        """Row subset in the order given by ``idx``."""
        idx = np.asarray(idx, dtype=int)
        target = None if self.target is None else self.target[idx]
        return Dataset(self.names, self.kinds, self.rows[idx], target, self.target_name, self.meta)

    def select(self, names: Sequence[str]) -> Dataset:
        cols = [self.names.index(n) for n in names]
        return Dataset(
            tuple(names),
            tuple(self.kinds[c] for c in cols),
            self.rows[:, cols].reshape(self.n, len(cols)),
            self.target,
            self.target_name,
            self.meta,
        )

    def replace(self, **changes) -> Dataset:
        fields = dict(
            names=self.names,
            kinds=self.kinds,
            rows=self.rows,
            target=self.target,
            target_name=self.target_name,
            meta=self.meta,
        )
        fields.update(changes)
        return Dataset(**fields)

    def with_target_column(self) -> tuple[list[str], np.ndarray, list[bool]]:
        """Features plus target as one raw matrix (target last).

        This is the view structure learning runs on.
        """
        names = list(self.names) + [self.target_name]
        values = np.column_stack([self.rows, self.y])
        discrete = self.is_discrete() + [True]
        return names, values, discrete

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        same_target = (self.target is None and other.target is None) or (
            self.target is not None
            and other.target is not None
            and np.array_equal(self.target, other.target)
        )
        return (
            self.names == other.names
            and self.kinds == other.kinds
            and self.target_name == other.target_name
            and self.rows.shape == other.rows.shape
            and np.array_equal(self.rows, other.rows)
            and same_target
            and self.meta == other.meta
        )

    __hash__ = None

    def to_json(self) -> dict:
        return {
            "names": list(self.names),
            "kinds": [_kind_to_json(k) for k in self.kinds],
            "rows": self.rows.tolist(),
            "target": None if self.target is None else [int(v) for v in self.target],
            "target_name": self.target_name,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_json(cls, obj: dict) -> Dataset:
        names = obj["names"]
        return cls(
            tuple(names),
            tuple(_kind_from_json(k) for k in obj["kinds"]),
            np.array(obj["rows"], dtype=float).reshape(len(obj["rows"]), len(names)),
            None if obj["target"] is None else np.array(obj["target"], dtype=float),
            obj.get("target_name", "y"),
            obj.get("meta", {}),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True, eq=False)
class EncodedMatrix:
    values: np.ndarray
    column_map: tuple[int, ...]
    names: tuple[str, ...]
    variables: tuple[str, ...]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StandardizeStats:
    columns: tuple[str, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]

    def to_json(self) -> dict:
        return {"columns": list(self.columns), "mean": list(self.mean), "std": list(self.std)}

    @classmethod
    def from_json(cls, obj: dict) -> StandardizeStats:
        return cls(tuple(obj["columns"]), tuple(obj["mean"]), tuple(obj["std"]))


# ---------------------------------------------------------------- CSV


def _format_cell(value: float, kind: ColumnKind) -> str:
    if isinstance(kind, Categorical):
        return kind.levels[int(value)]
    return repr(float(value))


def write_csv(data: Dataset, path: str | Path) -> None:
    """Write ``data`` in the dialect :func:`load_csv` reads (target last)."""
    header = list(data.names)
    if data.target is not None:
        header.append(data.target_name)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in range(data.n):
            cells = [_format_cell(v, k) for v, k in zip(data.rows[r], data.kinds)]
            if data.target is not None:
                cells.append(str(int(data.target[r])))
            w.writerow(cells)


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        body = [row for row in reader if row]
    return header, body


def load_csv(
    path: str | Path,
    schema: Sequence[ColumnKind],
    target_name: str,
    meta: dict | None = None,
) -> Dataset:
    """Parse a comma-separated file with a header row.

    ``schema`` gives one kind per header column, in file order, and must mark
    the column called ``target_name`` as :class:`BinaryTarget`. Empty cells
    are rejected. Errors name the 1-based data row and the column.
    """
    header, body = _read_rows(path)
    schema = list(schema)
    if len(header) != len(schema):
        raise DatasetError(f"header has {len(header)} columns but schema has {len(schema)}")
    if target_name not in header:
        raise DatasetError(f"target column {target_name!r} not found in header {header}")
    t_col = header.index(target_name)
    targets = [c for c, k in enumerate(schema) if isinstance(k, BinaryTarget)]
    if targets != [t_col]:
        raise DatasetError("schema must mark exactly the target column as BinaryTarget")
    lookup = [
        {lvl: i for i, lvl in enumerate(k.levels)} if isinstance(k, Categorical) else None
        for k in schema
    ]
    feat_cols = [c for c in range(len(header)) if c != t_col]
    rows = np.empty((len(body), len(feat_cols)))
    target = np.empty(len(body))
    for r, raw in enumerate(body, start=1):
        if len(raw) != len(header):
            raise DatasetError(f"row {r}: expected {len(header)} cells, got {len(raw)}")
        for c, cell in enumerate(raw):
            cell = cell.strip()
            col = header[c]
            if cell == "":
                raise DatasetError(f"row {r}, column {col!r}: empty cell")
            kind = schema[c]
            if c == t_col:
                if cell not in ("0", "1", "0.0", "1.0"):
                    raise DatasetError(f"non-binary target at row {r}: {cell!r}")
                target[r - 1] = float(cell)
                continue
            out = feat_cols.index(c)
            if isinstance(kind, Categorical):
                if cell not in lookup[c]:
                    raise DatasetError(f"row {r}, column {col!r}: unknown level {cell!r}")
                rows[r - 1, out] = lookup[c][cell]
            else:
                try:
                    value = float(cell)
                except ValueError:
                    raise DatasetError(f"row {r}, column {col!r}: cannot parse {cell!r}") from None
                if not math.isfinite(value):
                    raise DatasetError(f"row {r}, column {col!r}: non-finite value {cell!r}")
                rows[r - 1, out] = value
    if not body:
        raise DatasetError(f"{path}: no data rows")
    return Dataset(
        tuple(header[c] for c in feat_cols),
        tuple(schema[c] for c in feat_cols),
        rows,
        target,
        target_name,
        meta or {"seed": None, "mode": "none"},
    )


def infer_schema(path: str | Path, target_name: str) -> list[ColumnKind]:
    """Guess column kinds: numeric columns are continuous, everything else
    categorical with levels in order of first appearance."""
    header, body = _read_rows(path)
    schema: list[ColumnKind] = []
    for c, name in enumerate(header):
        if name == target_name:
            schema.append(BinaryTarget())
            continue
        cells = [row[c].strip() for row in body if c < len(row)]
        try:
            [float(v) for v in cells]
            schema.append(Continuous())
        except ValueError:
            schema.append(Categorical(tuple(dict.fromkeys(cells))))
    return schema


# ------------------------------------------------------ transformations


def standardize(
    data: Dataset, stats: StandardizeStats | None = None
) -> tuple[Dataset, StandardizeStats]:
    cont = [c for c, k in enumerate(data.kinds) if isinstance(k, Continuous)]
    names = tuple(data.names[c] for c in cont)
    if stats is None:
        block = data.rows[:, cont]
        mean = block.mean(axis=0)
        std = np.maximum(block.std(axis=0), STD_FLOOR)
        stats = StandardizeStats(names, tuple(map(float, mean)), tuple(map(float, std)))
    elif stats.columns != names:
        raise DatasetError(
            f"stats cover {len(stats.columns)} continuous columns, data has {len(names)}"
        )
    rows = np.array(data.rows)
    if cont:
        rows[:, cont] = (rows[:, cont] - np.asarray(stats.mean)) / np.asarray(stats.std)
    return data.replace(rows=rows), stats


def one_hot_encode(data: Dataset) -> EncodedMatrix:
    blocks, column_map, names = [], [], []
    for c, (name, kind) in enumerate(zip(data.names, data.kinds)):
        col = data.rows[:, c]
        if isinstance(kind, Categorical):
            L = len(kind.levels)
            blocks.append(np.eye(L)[col.astype(int)])
            column_map.extend([c] * L)
            names.extend(f"{name}={lvl}" for lvl in kind.levels)
        else:
            blocks.append(col[:, None])
            column_map.append(c)
            names.append(name)
    values = np.hstack(blocks) if blocks else np.empty((data.n, 0))
    return EncodedMatrix(values, tuple(column_map), tuple(names), data.names)


def kfold_split(data: Dataset, k: int, seed: int) -> list[tuple[Dataset, Dataset]]:
    """Seeded shuffle, then ``k`` contiguous folds of near-equal size.

    Rows inside each fold keep the shuffled order.
    """
    if k < 2:
        raise DatasetError("k must be at least 2")
    if k > data.n:
        raise DatasetError(f"cannot make {k} folds from {data.n} rows")
    perm = np.random.default_rng(seed).permutation(data.n)
    folds = np.array_split(perm, k)
    out = []
    for f in range(k):
        train_idx = np.concatenate([folds[g] for g in range(k) if g != f])
        out.append((data.take(train_idx), data.take(folds[f])))
    return out

"""Discrete Bayesian networks: BIF parsing and ancestral sampling.

Supported BIF subset: ``network``, ``variable`` (``type discrete``) and
``probability`` blocks. Probability blocks may use ``table`` entries or
per-parent-configuration rows ``(lvl, lvl) p, p, ...;``. ``property`` lines
and ``//`` / ``/* */`` comments are ignored.

For a conditional ``table`` the child's level is the slowest-varying index and
the last parent the fastest, matching the files distributed by bnlearn.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

import numpy as np

from .dag import DAG
from .dataset import Categorical, Dataset, DatasetError

ROW_TOL = 1e-4

_TOKEN = re.compile(r"//[^\n]*|/\*.*?\*/|[{}()\[\];,|]|[^\s{}()\[\];,|]+", re.S)


class BIFError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BayesNet:
    names: tuple[str, ...]
    levels: tuple[tuple[str, ...], ...]
    parents: tuple[tuple[int, ...], ...]
    # cpt[v] has shape (*parent_cards, card_v)
    cpt: tuple[np.ndarray, ...]

    def __post_init__(self):
        for v, table in enumerate(self.cpt):
            expected = tuple(len(self.levels[p]) for p in self.parents[v]) + (len(self.levels[v]),)
            if table.shape != expected:
                raise BIFError(f"CPT of {self.names[v]} has shape {table.shape}, expected {expected}")
            if (table < 0).any() or not np.allclose(table.sum(axis=-1), 1.0, atol=1e-6):
                raise BIFError(f"CPT of {self.names[v]} is not a distribution")
            table.flags.writeable = False
        self.dag()

    def index(self, name: str) -> int:
        return self.names.index(name)

    def dag(self) -> DAG:
        edges = [(self.names[p], self.names[v]) for v, ps in enumerate(self.parents) for p in ps]
        return DAG(self.names, edges)

    def topological_order(self) -> list[int]:
        return [self.names.index(v) for v in self.dag().topological_order()]


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, int]] = []
        for m in _TOKEN.finditer(text):
            tok = m.group()
            if tok.startswith("//") or tok.startswith("/*"):
                continue
            self.items.append((tok, text.count("\n", 0, m.start()) + 1))
        self.pos = 0

    def peek(self) -> str | None:
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    @property
    def line(self) -> int:
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.items[-1][1] if self.items else 1

    def next(self) -> str:
        if self.pos >= len(self.items):
            raise BIFError(f"line {self.line}: unexpected end of input")
        tok = self.items[self.pos][0]
        self.pos += 1
        return tok

    def expect(self, want: str) -> None:
        line = self.line
        tok = self.next()
        if tok != want:
            raise BIFError(f"line {line}: expected {want!r}, found {tok!r}")

    def skip_statement(self) -> None:
        while self.next() != ";":
            pass

    def skip_block(self) -> None:
        self.expect("{")
        depth = 1
        while depth:
            tok = self.next()
            depth += {"{": 1, "}": -1}.get(tok, 0)


def _number(tok: str, line: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise BIFError(f"line {line}: expected a probability, found {tok!r}") from None


def _parse_variable(ts: _Tokens) -> tuple[str, tuple[str, ...]]:
    name = ts.next()
    ts.expect("{")
    levels = None
    while ts.peek() != "}":
        line = ts.line
        tok = ts.next()
        if tok == "type":
            kind = ts.next()
            if kind != "discrete":
                raise BIFError(f"line {line}: only discrete variables are supported (got {kind!r})")
            ts.expect("[")
            count = int(_number(ts.next(), line))
            ts.expect("]")
            ts.expect("{")
            levels = []
            while True:
                levels.append(ts.next())
                sep = ts.next()
                if sep == "}":
                    break
                if sep != ",":
                    raise BIFError(f"line {ts.line}: expected ',' or '}}' in level list")
            ts.expect(";")
            if len(levels) != count:
                raise BIFError(f"line {line}: {name} declares {count} levels but lists {len(levels)}")
        elif tok == "property":
            ts.skip_statement()
        else:
            raise BIFError(f"line {line}: unexpected {tok!r} in variable block")
    ts.expect("}")
    if levels is None:
        raise BIFError(f"variable {name} has no type declaration")
    return name, tuple(levels)


def _read_numbers(ts: _Tokens) -> list[float]:
    out = []
    while True:
        line = ts.line
        out.append(_number(ts.next(), line))
        sep = ts.next()
        if sep == ";":
            return out
        if sep != ",":
            raise BIFError(f"line {ts.line}: expected ',' or ';' after probability")


def _check_row(row: np.ndarray, where: str, line: int) -> np.ndarray:
    if (row < 0).any():
        raise BIFError(f"line {line}: negative probability in {where}")
    s = row.sum()
    if abs(s - 1.0) > ROW_TOL:
        raise BIFError(f"line {line}: row sums to {s:.6g} in {where}")
    return row / s


def _parse_probability(ts: _Tokens, variables: dict) -> tuple[str, list[str], np.ndarray]:
    start = ts.line
    ts.expect("(")
    child = ts.next()
    parents: list[str] = []
    tok = ts.next()
    if tok == "|":
        while True:
            parents.append(ts.next())
            tok = ts.next()
            if tok == ")":
                break
            if tok != ",":
                raise BIFError(f"line {ts.line}: expected ',' or ')' in parent list")
    elif tok != ")":
        raise BIFError(f"line {start}: expected '|' or ')' after {child!r}")
    for v in [child, *parents]:
        if v not in variables:
            raise BIFError(f"line {start}: probability block references undeclared variable {v!r}")
    child_levels = variables[child]
    parent_levels = [variables[p] for p in parents]
    pcards = tuple(len(lv) for lv in parent_levels)
    table = np.full(pcards + (len(child_levels),), np.nan)
    ts.expect("{")
    while ts.peek() != "}":
        line = ts.line
        tok = ts.peek()
        if tok == "table":
            ts.next()
            values = np.array(_read_numbers(ts))
            if values.size != table.size:
                raise BIFError(
                    f"line {line}: table for {child} has {values.size} entries, expected {table.size}"
                )
            values = values.reshape(len(child_levels), -1).T.reshape(table.shape)
            for combo in itertools.product(*(range(c) for c in pcards)):
                table[combo] = _check_row(values[combo], f"table of {child}", line)
        elif tok == "(":
            ts.next()
            combo = []
            while True:
                lvl = ts.next()
                p = parents[len(combo)] if len(combo) < len(parents) else None
                if p is None:
                    raise BIFError(f"line {line}: too many parent levels for {child}")
                if lvl not in variables[p]:
                    raise BIFError(f"line {line}: unknown level {lvl!r} of {p}")
                combo.append(variables[p].index(lvl))
                sep = ts.next()
                if sep == ")":
                    break
                if sep != ",":
                    raise BIFError(f"line {line}: expected ',' or ')' in parent configuration")
            if len(combo) != len(parents):
                raise BIFError(f"line {line}: parent configuration for {child} is incomplete")
            row = np.array(_read_numbers(ts))
            if row.size != len(child_levels):
                raise BIFError(f"line {line}: expected {len(child_levels)} probabilities for {child}")
            table[tuple(combo)] = _check_row(row, f"{child} given {tuple(combo)}", line)
        elif tok == "property":
            ts.next()
            ts.skip_statement()
        else:
            raise BIFError(f"line {line}: unexpected {tok!r} in probability block")
    ts.expect("}")
    if np.isnan(table).any():
        missing = np.argwhere(np.isnan(table[..., 0]))[0] if pcards else ()
        labels = tuple(parent_levels[k][i] for k, i in enumerate(missing))
        raise BIFError(f"line {start}: CPT of {child} is missing parent combination {labels}")
    return child, parents, table


def parse_bif(text: str) -> BayesNet:
    ts = _Tokens(text)
    variables: dict[str, tuple[str, ...]] = {}
    cpts: dict[str, tuple[list[str], np.ndarray]] = {}
    while ts.peek() is not None:
        line = ts.line
        tok = ts.next()
        if tok == "network":
            while ts.peek() != "{":
                ts.next()
            ts.skip_block()
        elif tok == "variable":
            name, levels = _parse_variable(ts)
            if name in variables:
                raise BIFError(f"line {line}: variable {name} declared twice")
            variables[name] = levels
        elif tok == "probability":
            child, parents, table = _parse_probability(ts, variables)
            if child in cpts:
                raise BIFError(f"line {line}: second probability block for {child}")
            cpts[child] = (parents, table)
        else:
            raise BIFError(f"line {line}: unexpected token {tok!r}")
    names = tuple(variables)
    missing = [v for v in names if v not in cpts]
    if missing:
        raise BIFError(f"no probability block for {missing}")
    try:
        return BayesNet(
            names,
            tuple(variables[v] for v in names),
            tuple(tuple(names.index(p) for p in cpts[v][0]) for v in names),
            tuple(cpts[v][1] for v in names),
        )
    except ValueError as exc:
        raise BIFError(str(exc)) from None


def read_bif(path) -> BayesNet:
    with open(path) as fh:
        return parse_bif(fh.read())


def ancestral_sample(net: BayesNet, n: int, seed: int) -> Dataset:
    """Draw ``n`` joint samples root-to-leaf. Returns an unlabeled dataset
    (all columns categorical, no target)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    values = np.zeros((n, len(net.names)), dtype=int)
    for v in net.topological_order():
        cum = np.cumsum(net.cpt[v], axis=-1)
        rows = cum[tuple(values[:, p] for p in net.parents[v])] if net.parents[v] else np.broadcast_to(cum, (n, cum.shape[-1]))
        u = rng.random(n)
        draw = (u[:, None] >= rows[:, :-1]).sum(axis=1)
        values[:, v] = np.minimum(draw, cum.shape[-1] - 1)
    return Dataset(
        net.names,
        tuple(Categorical(lv) for lv in net.levels),
        values.astype(float),
        None,
        None,
        {"seed": seed, "mode": "none"},
    )


def binarize_target(data: Dataset, var: str, positive_levels) -> Dataset:
    """Move categorical ``var`` out of the features into a 0/1 target that is 1
    exactly for rows whose level is in ``positive_levels``."""
    if var not in data.names:
        raise DatasetError(f"unknown variable {var!r}")
    c = data.names.index(var)
    kind = data.kinds[c]
    if not isinstance(kind, Categorical):
        raise DatasetError(f"{var!r} is not categorical")
    positive = set(positive_levels)
    unknown = positive - set(kind.levels)
    if unknown:
        raise DatasetError(f"unknown level(s) {sorted(unknown)} for {var!r}")
    pos_idx = [kind.levels.index(lvl) for lvl in positive]
    target = np.isin(data.rows[:, c], pos_idx).astype(float)
    keep = [i for i in range(data.d) if i != c]
    return Dataset(
        tuple(data.names[i] for i in keep),
        tuple(data.kinds[i] for i in keep),
        data.rows[:, keep],
        target,
        var,
        data.meta,
    )

"""FCI structure learning and the robust-predictor mask.

Marks are stored in a ``d x d`` matrix where entry ``(i, j)`` is the mark at
the ``j`` end of the edge ``i -- j``; ``i *-> j`` therefore reads
``M[i, j] == ARROW``. Orientation uses unshielded colliders followed by
rules R1-R4 of Zhang (2008). The completeness rules R5-R10 are not applied,
which can only leave extra circle marks.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from itertools import combinations
from typing import Sequence

import numpy as np

from .citest import ALPHA, CITester, make_tester
from .dataset import Dataset

DEFAULT_MAX_DEPTH = 3


class EdgeMark(IntEnum):
    NONE = 0
    TAIL = 1
    ARROW = 2
    CIRCLE = 3


NONE, TAIL, ARROW, CIRCLE = EdgeMark.NONE, EdgeMark.TAIL, EdgeMark.ARROW, EdgeMark.CIRCLE
_SYMBOL = {TAIL: "-", ARROW: ">", CIRCLE: "o"}
_LEFT = {TAIL: "-", ARROW: "<", CIRCLE: "o"}


@dataclass(frozen=True, eq=False)
class PAG:
    names: tuple[str, ...]
    marks: np.ndarray

    def __post_init__(self):
        m = np.array(self.marks, dtype=np.int8)
        if m.shape != (len(self.names), len(self.names)):
            raise ValueError("mark matrix must be d x d")
        if np.diag(m).any():
            raise ValueError("self-edges are not allowed")
        if not np.array_equal(m == NONE, (m == NONE).T):
            raise ValueError("adjacency must be symmetric")
        m.flags.writeable = False
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "marks", m)

    def __eq__(self, other):
        return isinstance(other, PAG) and self.names == other.names and np.array_equal(self.marks, other.marks)

    __hash__ = None

    def mark(self, a: str, b: str) -> EdgeMark:
        """Mark at the ``b`` end of the edge between ``a`` and ``b``."""
        return EdgeMark(self.marks[self.names.index(a), self.names.index(b)])

    def adjacent(self, a: str, b: str) -> bool:
        return self.mark(a, b) != NONE

    def neighbors(self, a: str) -> list[str]:
        i = self.names.index(a)
        return [self.names[j] for j in np.flatnonzero(self.marks[i])]

    def edges(self) -> list[tuple[str, str, EdgeMark, EdgeMark]]:
        """``(a, b, mark at a, mark at b)`` for every edge with a before b."""
        out = []
        d = len(self.names)
        for i in range(d):
            for j in range(i + 1, d):
                if self.marks[i, j] != NONE:
                    out.append((self.names[i], self.names[j], EdgeMark(self.marks[j, i]), EdgeMark(self.marks[i, j])))
        return out

    def edge_string(self, a: str, b: str) -> str:
        return f"{a} {_LEFT[self.mark(b, a)]}-{_SYMBOL[self.mark(a, b)]} {b}"

    def to_json(self) -> dict:
        return {
            "variables": list(self.names),
            "edges": [
                {"from": a, "to": b, "mark_from": ma.name, "mark_to": mb.name}
                for a, b, ma, mb in self.edges()
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> PAG:
        names = tuple(obj["variables"])
        m = np.zeros((len(names), len(names)), dtype=np.int8)
        for e in obj["edges"]:
            a, b = names.index(e["from"]), names.index(e["to"])
            m[b, a] = EdgeMark[e["mark_from"]]
            m[a, b] = EdgeMark[e["mark_to"]]
        return cls(names, m)


# SepSets: frozenset({i, j}) -> tuple of conditioning indices
SepSets = dict


@dataclass(frozen=True)
class CausalMask:
    names: tuple[str, ...]
    values: tuple[int, ...]

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.names, self.values))

    def to_json(self) -> dict:
        return self.as_dict()

    @classmethod
    def from_json(cls, obj: dict) -> CausalMask:
        return cls(tuple(obj), tuple(int(v) for v in obj.values()))

    @classmethod
    def full(cls, names: Sequence[str]) -> CausalMask:
        return cls(tuple(names), (1,) * len(names))


# ----------------------------------------------------------------- skeleton


def learn_skeleton(
    tester: CITester,
    n_vars: int,
    alpha: float = ALPHA,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> tuple[np.ndarray, SepSets]:
    """Adjacency search with order-independent ("stable") removals.

    At each conditioning size, adjacency sets are frozen at the start of the
    level; for every remaining pair ``i < j`` subsets of ``adj(i) - {j}`` and
    then ``adj(j) - {i}`` are tried in lexicographic order and the first one
    with p > alpha removes the edge. Removals take effect at the end of the
    level.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    adj = ~np.eye(n_vars, dtype=bool)
    sepsets: SepSets = {}
    for depth in range(max_depth + 1):
        frozen = [list(np.flatnonzero(adj[v])) for v in range(n_vars)]
        if all(len(a) - 1 < depth for a in frozen):
            break
        removed = []
        for i in range(n_vars):
            for j in range(i + 1, n_vars):
                if not adj[i, j]:
                    continue
                sep = _find_sepset(tester, i, j, frozen, depth, alpha)
                if sep is not None:
                    removed.append((i, j))
                    sepsets[frozenset((i, j))] = sep
        for i, j in removed:
            adj[i, j] = adj[j, i] = False
    return adj, sepsets


def _find_sepset(tester, i, j, frozen, depth, alpha):
    tried = set()
    for a, b in ((i, j), (j, i)):
        pool = [v for v in frozen[a] if v != b]
        for S in combinations(pool, depth):
            key = tuple(sorted(S))
            if key in tried:
                continue
            tried.add(key)
            if tester(i, j, key) > alpha:
                return key
    return None


# --------------------------------------------------------------- colliders


def orient_v_structures(adj: np.ndarray, sepsets: SepSets, names: Sequence[str]) -> PAG:
    return PAG(tuple(names), _colliders(adj, sepsets))


def _colliders(adj: np.ndarray, sepsets: SepSets) -> np.ndarray:
    d = adj.shape[0]
    M = np.where(adj, CIRCLE, NONE).astype(np.int8)
    np.fill_diagonal(M, NONE)
    for k in range(d):
        nbrs = np.flatnonzero(adj[k])
        for i, j in combinations(nbrs, 2):
            if adj[i, j]:
                continue
            sep = sepsets.get(frozenset((i, j)), ())
            if k not in sep:
                M[i, k] = ARROW
                M[j, k] = ARROW
    return M


# ----------------------------------------------------------- possible-d-sep


def possible_d_sep(M: np.ndarray, x: int) -> list[int]:
    """Nodes reachable from ``x`` along paths whose every inner node is a
    collider on the path or the middle of a triangle."""
    adj = M != NONE
    seen = set()
    queue = deque()
    for y in np.flatnonzero(adj[x]):
        seen.add((x, int(y)))
        queue.append((x, int(y)))
    out = set()
    while queue:
        a, b = queue.popleft()
        out.add(b)
        for c in np.flatnonzero(adj[b]):
            c = int(c)
            if c == a or c == x or (b, c) in seen:
                continue
            collider = M[a, b] == ARROW and M[c, b] == ARROW
            if collider or adj[a, c]:
                seen.add((b, c))
                queue.append((b, c))
    out.discard(x)
    return sorted(out)


# ------------------------------------------------------------------- rules


def _is_parent(M, a, c):
    """a --> c"""
    return M[a, c] == ARROW and M[c, a] == TAIL


def _rule1(M, d):
    changed = False
    for b in range(d):
        for a in np.flatnonzero(M[:, b] == ARROW):
            if M[b, a] == NONE:
                continue
            for c in np.flatnonzero(M[:, b] == CIRCLE):
                if c == a or M[a, c] != NONE:
                    continue
                M[c, b] = TAIL
                M[b, c] = ARROW
                changed = True
    return changed


def _rule2(M, d):
    changed = False
    for a in range(d):
        for c in np.flatnonzero(M[a] == CIRCLE):
            for b in range(d):
                if b in (a, c) or M[a, b] == NONE or M[b, c] == NONE:
                    continue
                if (_is_parent(M, a, b) and M[b, c] == ARROW) or (M[a, b] == ARROW and _is_parent(M, b, c)):
                    M[a, c] = ARROW
                    changed = True
                    break
    return changed


def _rule3(M, d):
    changed = False
    for b in range(d):
        into_b = [a for a in np.flatnonzero(M[:, b] == ARROW) if M[b, a] != NONE]
        for dd in np.flatnonzero(M[:, b] == CIRCLE):
            for a, c in combinations(into_b, 2):
                if M[a, c] != NONE or dd in (a, c):
                    continue
                if M[a, dd] == CIRCLE and M[c, dd] == CIRCLE:
                    M[dd, b] = ARROW
                    changed = True
                    break
    return changed


def _rule4(M, d, sepsets):
    changed = False
    for c in range(d):
        for b in np.flatnonzero(M[c] == CIRCLE):
            # b o-* c: the circle sits at b
            for a in range(d):
                if a in (b, c) or not _is_parent(M, a, c) or M[b, a] != ARROW:
                    continue
                found = _discriminating_start(M, a, b, c)
                if found is None:
                    continue
                if b in sepsets.get(frozenset((found, c)), ()):
                    M[b, c] = ARROW
                    M[c, b] = TAIL
                else:
                    M[a, b] = ARROW
                    M[b, a] = ARROW
                    M[b, c] = ARROW
                    M[c, b] = ARROW
                changed = True
                break
    return changed


def _discriminating_start(M, a, b, c):
    """Breadth-first search backwards from ``a`` for the far end ``d`` of a
    discriminating path <d, ..., a, b, c> for ``b``."""
    queue = deque([(a, (b, a))])
    seen = {a}
    while queue:
        u, path = queue.popleft()
        for w in np.flatnonzero(M[:, u] == ARROW):
            w = int(w)
            if w in path or w == c or M[u, w] == NONE:
                continue
            if M[w, c] == NONE:
                return w
            if w not in seen and _is_parent(M, w, c) and M[u, w] == ARROW:
                seen.add(w)
                queue.append((w, path + (w,)))
    return None


def _orient_rules(M: np.ndarray, sepsets: SepSets) -> np.ndarray:
    d = M.shape[0]
    while True:
        changed = _rule1(M, d)
        changed |= _rule2(M, d)
        changed |= _rule3(M, d)
        changed |= _rule4(M, d, sepsets)
        if not changed:
            return M


def apply_fci_rules(
    pag: PAG,
    sepsets: SepSets,
    tester: CITester,
    alpha: float = ALPHA,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> PAG:
    """Possible-D-SEP re-testing, collider re-orientation, then R1-R4 to a
    fixpoint. ``sepsets`` is updated in place with any new separations."""
    M = np.array(pag.marks, dtype=np.int8)
    d = M.shape[0]
    pds = [possible_d_sep(M, x) for x in range(d)]
    adj = M != NONE
    removed = False
    for x in range(d):
        for y in range(x + 1, d):
            if not adj[x, y]:
                continue
            sep = None
            for a, b in ((x, y), (y, x)):
                pool = [v for v in pds[a] if v != b]
                for size in range(1, min(max_depth, len(pool)) + 1):
                    for S in combinations(pool, size):
                        if tester(x, y, S) > alpha:
                            sep = S
                            break
                    if sep is not None:
                        break
                if sep is not None:
                    break
            if sep is not None:
                adj[x, y] = adj[y, x] = False
                sepsets[frozenset((x, y))] = tuple(sorted(sep))
                removed = True
    if removed:
        M = _colliders(adj, sepsets)
    return PAG(pag.names, _orient_rules(M, sepsets))


def run_fci(
    data: Dataset,
    tester: CITester | str = "auto",
    alpha: float = ALPHA,
    max_depth: int = DEFAULT_MAX_DEPTH,
    seed: int = 0,
) -> PAG:
    """FCI over the raw features plus the target (target is the last node)."""
    names, values, discrete = data.with_target_column()
    if isinstance(tester, str):
        tester = make_tester(tester, values, discrete, seed=seed)
    return fci_from_tester(tester, names, alpha, max_depth)


def fci_from_tester(
    tester: CITester,
    names: Sequence[str],
    alpha: float = ALPHA,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> PAG:
    adj, sepsets = learn_skeleton(tester, len(names), alpha, max_depth)
    pag = orient_v_structures(adj, sepsets, names)
    return apply_fci_rules(pag, sepsets, tester, alpha, max_depth)


def extract_mask(pag: PAG, target: str) -> CausalMask:
    """1 for every variable whose edge with ``target`` has an arrowhead at the
    target end (any mark at the variable end), 0 otherwise."""
    names = tuple(n for n in pag.names if n != target)
    values = []
    for v in names:
        at_target = pag.mark(v, target)
        values.append(int(at_target == ARROW and pag.mark(target, v) in (TAIL, CIRCLE, ARROW)))
    return CausalMask(names, tuple(values))


def dumps_pag(pag: PAG) -> str:
    return json.dumps(pag.to_json(), indent=2)

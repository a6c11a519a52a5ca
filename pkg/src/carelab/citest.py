"""Conditional-independence tests.

Each test function takes a raw ``N x d`` value matrix (continuous reals,
categorical level codes) and variable indices, and returns a
:class:`CIResult`. Tester classes bind a matrix and expose the
``tester(i, j, S) -> p_value`` interface that structure learning uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from scipy import stats

from .dag import DAG

ALPHA = 0.1


@dataclass(frozen=True)
class CIResult:
    statistic: float
    pvalue: float
    flag: str | None = None


class CITester(Protocol):
    def __call__(self, i: int, j: int, S: Sequence[int] = ()) -> float: ...


# ----------------------------------------------------------------- Fisher z


def _residualize(data: np.ndarray, cols: list[int], S: list[int]) -> np.ndarray | None:
    X = data[:, cols]
    X = X - X.mean(axis=0)
    if not S:
        return X
    Z = data[:, S]
    Z = Z - Z.mean(axis=0)
    if np.linalg.matrix_rank(Z) < len(S):
        return None
    coef, *_ = np.linalg.lstsq(Z, X, rcond=None)
    return X - Z @ coef


def fisher_z(data: np.ndarray, i: int, j: int, S: Sequence[int] = ()) -> CIResult:
    """Fisher z-test on the partial correlation of columns ``i`` and ``j``
    given ``S``. Requires ``N > |S| + 3``.

    A rank-deficient conditioning block is reported as dependence (p = 0,
    flag ``"singular"``); a constant residual as independence (p = 1,
    flag ``"degenerate"``).
    """
    S = list(S)
    n = data.shape[0]
    if n <= len(S) + 3:
        raise ValueError(f"fisher_z needs more than {len(S) + 3} samples, got {n}")
    R = _residualize(data, [i, j], S)
    if R is None:
        return CIResult(np.inf, 0.0, "singular")
    ri, rj = R[:, 0], R[:, 1]
    si, sj = np.sqrt(ri @ ri), np.sqrt(rj @ rj)
    scale = max(np.abs(data[:, [i, j]]).max(), 1.0) * np.sqrt(n) * 1e-10
    if si <= scale or sj <= scale:
        return CIResult(0.0, 1.0, "degenerate")
    r = float(np.clip((ri @ rj) / (si * sj), -1.0, 1.0))
    if abs(r) >= 1.0:
        return CIResult(np.inf, 0.0)
    z = np.sqrt(n - len(S) - 3) * np.arctanh(r)
    p = float(2.0 * stats.norm.sf(abs(z)))
    return CIResult(float(z), min(max(p, 0.0), 1.0))


# ------------------------------------------------------------------- G^2


def _codes(col: np.ndarray) -> tuple[np.ndarray, int]:
    _, inv = np.unique(col, return_inverse=True)
    return inv.ravel(), int(inv.max()) + 1 if inv.size else 0


def g_squared(data: np.ndarray, i: int, j: int, S: Sequence[int] = ()) -> CIResult:
    """Likelihood-ratio G^2 test on the (i, j) contingency tables within each
    configuration of ``S``. Degrees of freedom are (r_i - 1)(r_j - 1) prod r_s
    with observed cardinalities; fewer than 5 samples per degree of freedom
    returns p = 1 flagged ``"untestable"``."""
    S = list(S)
    n = data.shape[0]
    xi, ri = _codes(data[:, i])
    xj, rj = _codes(data[:, j])
    strata = np.zeros(n, dtype=np.int64)
    rs = 1
    for s in S:
        xs, r = _codes(data[:, s])
        strata = strata * r + xs
        rs *= r
    df = (ri - 1) * (rj - 1) * rs
    if df == 0:
        return CIResult(0.0, 1.0)
    if n < 5 * df:
        return CIResult(0.0, 1.0, "untestable")
    _, strata = np.unique(strata, return_inverse=True)
    counts = np.zeros((strata.max() + 1, ri, rj))
    np.add.at(counts, (strata, xi, xj), 1.0)
    n_k = counts.sum(axis=(1, 2), keepdims=True)
    expected = counts.sum(axis=2, keepdims=True) * counts.sum(axis=1, keepdims=True) / n_k
    nz = counts > 0
    g2 = float(2.0 * np.sum(counts[nz] * np.log(counts[nz] / expected[nz])))
    g2 = max(g2, 0.0)
    return CIResult(g2, float(stats.chi2.sf(g2, df)))


# ------------------------------------------------- predictive permutation


@dataclass(frozen=True)
class PermutationConfig:
    n_permutations: int = 100
    knn_k: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_permutations < 20:
            raise ValueError("n_permutations must be >= 20")


def _design(data, cols, discrete):
    blocks = []
    for c in cols:
        col = data[:, c]
        if discrete[c]:
            levels = np.unique(col)
            blocks.append((col[:, None] == levels[None, :]).astype(float))
        else:
            sd = col.std()
            blocks.append(((col - col.mean()) / (sd if sd > 0 else 1.0))[:, None])
    return blocks


def _loo_knn_loss(F: np.ndarray, target: np.ndarray, k: int, classify: bool) -> float:
    sq = (F * F).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * F @ F.T
    np.fill_diagonal(d2, np.inf)
    k = min(k, F.shape[0] - 1)
    nbrs = np.argpartition(d2, k - 1, axis=1)[:, :k]
    if classify:
        # Brier loss of neighbour class frequencies
        onehot = target
        pred = onehot[nbrs].mean(axis=1)
        return float(((pred - onehot) ** 2).sum(axis=1).mean())
    pred = target[nbrs].mean(axis=1)
    return float(((pred - target) ** 2).mean())


def predictive_permutation_test(
    data: np.ndarray,
    i: int,
    j: int,
    S: Sequence[int] = (),
    cfg: PermutationConfig = PermutationConfig(),
    discrete: Sequence[bool] | None = None,
) -> CIResult:
    """Permutation test of whether ``i`` helps predict ``j`` beyond ``S``.

    A leave-one-out k-nearest-neighbour model predicts ``j`` from
    ``S ∪ {i}``; its loss is compared with the losses obtained after
    permuting column ``i`` (within strata of ``S`` when ``S`` is all
    discrete). The p-value is the add-one fraction of permutations that
    predict at least as well as the intact data.
    """
    S = list(S)
    if discrete is None:
        discrete = [False] * data.shape[1]
    discrete = list(discrete)
    rng = np.random.default_rng(cfg.seed)
    n = data.shape[0]
    if discrete[j]:
        levels = np.unique(data[:, j])
        target = (data[:, j][:, None] == levels[None, :]).astype(float)
    else:
        col = data[:, j]
        target = (col - col.mean()) / (col.std() if col.std() > 0 else 1.0)
    if np.ptp(data[:, j]) == 0 or np.ptp(data[:, i]) == 0 or n < 3:
        return CIResult(0.0, 1.0, "degenerate")
    s_blocks = _design(data, S, discrete)
    i_block = _design(data, [i], discrete)[0]
    strata = None
    if S and all(discrete[s] for s in S):
        _, strata = np.unique(data[:, S], axis=0, return_inverse=True)
        strata = strata.ravel()

    def loss(ib):
        F = np.hstack(s_blocks + [ib])
        return _loo_knn_loss(F, target, cfg.knn_k, discrete[j])

    observed = loss(i_block)
    hits = 0
    for _ in range(cfg.n_permutations):
        if strata is None:
            perm = rng.permutation(n)
        else:
            perm = np.arange(n)
            for g in np.unique(strata):
                idx = np.flatnonzero(strata == g)
                perm[idx] = idx[rng.permutation(idx.size)]
        if loss(i_block[perm]) <= observed:
            hits += 1
    p = (hits + 1) / (cfg.n_permutations + 1)
    return CIResult(observed, p)


# ------------------------------------------------------------ d-separation


def d_sep_oracle(graph: DAG, i: str, j: str, S=()) -> bool:
    return graph.d_separated(i, j, S)


# ----------------------------------------------------------------- testers


@dataclass
class _CachedTester:
    cache: dict = field(default_factory=dict, init=False, repr=False)
    flags: dict = field(default_factory=dict, init=False, repr=False)

    def __call__(self, i: int, j: int, S: Sequence[int] = ()) -> float:
        key = (min(i, j), max(i, j), tuple(sorted(S)))
        if key not in self.cache:
            res = self.result(*key)
            self.cache[key] = res.pvalue
            if res.flag:
                self.flags[key] = res.flag
        return self.cache[key]

    def result(self, i: int, j: int, S: tuple[int, ...]) -> CIResult:
        raise NotImplementedError


@dataclass
class FisherZTester(_CachedTester):
    data: np.ndarray = None

    def result(self, i, j, S):
        return fisher_z(self.data, i, j, S)


@dataclass
class GSquaredTester(_CachedTester):
    data: np.ndarray = None

    def result(self, i, j, S):
        return g_squared(self.data, i, j, S)


@dataclass
class PermutationTester(_CachedTester):
    data: np.ndarray = None
    discrete: Sequence[bool] = None
    cfg: PermutationConfig = PermutationConfig()

    def result(self, i, j, S):
        return predictive_permutation_test(self.data, i, j, S, self.cfg, self.discrete)


@dataclass
class AutoTester(_CachedTester):
    """Fisher z when every involved variable is continuous, G^2 when every
    one is discrete, the permutation test otherwise."""

    data: np.ndarray = None
    discrete: Sequence[bool] = None
    cfg: PermutationConfig = PermutationConfig()

    def result(self, i, j, S):
        kinds = {bool(self.discrete[v]) for v in (i, j, *S)}
        if kinds == {False}:
            return fisher_z(self.data, i, j, S)
        if kinds == {True}:
            return g_squared(self.data, i, j, S)
        return predictive_permutation_test(self.data, i, j, S, self.cfg, self.discrete)


@dataclass
class OracleTester(_CachedTester):
    """p = 1 when d-separated in ``graph`` else 0. ``names`` maps variable
    indices to graph nodes; graph nodes outside ``names`` act as latents."""

    graph: DAG = None
    names: Sequence[str] = None

    def result(self, i, j, S):
        sep = self.graph.d_separated(self.names[i], self.names[j], [self.names[s] for s in S])
        return CIResult(0.0, 1.0 if sep else 0.0)


def make_tester(kind: str, data: np.ndarray, discrete: Sequence[bool], seed: int = 0) -> CITester:
    kind = kind.lower()
    if kind == "fisher_z":
        return FisherZTester(data=np.asarray(data, float))
    if kind == "g_squared":
        return GSquaredTester(data=np.asarray(data, float))
    if kind in ("permutation", "ppcit"):
        return PermutationTester(data=np.asarray(data, float), discrete=list(discrete), cfg=PermutationConfig(seed=seed))
    if kind == "auto":
        return AutoTester(data=np.asarray(data, float), discrete=list(discrete), cfg=PermutationConfig(seed=seed))
    raise ValueError(f"unknown tester {kind!r}")

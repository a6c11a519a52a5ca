"""Feature attributions and normalized importance scores.

All attributions are taken on the class-1 logit. For a single-logit binary
head the two classes' attributions are negatives of each other, so averaging
absolute contributions over both classes equals the single-logit ``|phi|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from .model import ModelParams, forward_logit, input_gradient, LR

EXACT_MAX_FEATURES = 12
EXACT_HARD_LIMIT = 25
N_COALITIONS = 2048


@dataclass(frozen=True, eq=False)
class AttributionMatrix:
    values: np.ndarray
    column_map: tuple[int, ...]
    variables: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != len(self.column_map):
            raise ValueError("attribution matrix width must match column_map")
        if not np.all(np.isfinite(v)):
            raise ValueError("attributions must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ImportanceScores:
    names: tuple[str, ...]
    scores: tuple[float, ...]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.scores))

    def top(self, k: int) -> list[tuple[str, float]]:
        order = sorted(range(len(self.names)), key=lambda i: (-self.scores[i], i))
        return [(self.names[i], self.scores[i]) for i in order[:k]]


def _identity_map(p, column_map, variables):
    if column_map is None:
        column_map = tuple(range(p))
    if variables is None:
        variables = tuple(f"x{j}" for j in range(max(column_map, default=-1) + 1))
    return tuple(column_map), tuple(variables)


def grad_x_input(params: ModelParams, X: np.ndarray, column_map=None, variables=None) -> AttributionMatrix:
    X = np.asarray(X, dtype=float)
    cm, names = _identity_map(X.shape[1], column_map, variables)
    return AttributionMatrix(X * input_gradient(params, X), cm, names)


# ------------------------------------------------------------------ k-means


def kmeans(X: np.ndarray, k: int, seed: int = 0, max_iter: int = 100):
    """Lloyd's algorithm with farthest-point initialization.

    The first centre is a seeded random row; each further centre is the row
    farthest from the centres chosen so far. Returns ``(centroids, labels,
    sse_history)`` where the history holds the within-cluster sum of squares
    after every assignment step.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centers = [int(rng.integers(n))]
    dist = ((X - X[centers[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        dist_masked = dist.copy()
        dist_masked[centers] = -1.0
        nxt = int(np.argmax(dist_masked))
        centers.append(nxt)
        dist = np.minimum(dist, ((X - X[nxt]) ** 2).sum(axis=1))
    C = X[centers].copy()
    history = []
    labels = None
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = X[labels == c]
            if len(members):
                C[c] = members.mean(axis=0)
    return C, labels, history


def kmeans_summarize(X: np.ndarray, k: int = 10, seed: int = 0) -> np.ndarray:
    return kmeans(X, k, seed)[0]


# ---------------------------------------------------------------- Shapley


def _as_logit_fn(model) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(model, ModelParams):
        return lambda Z: forward_logit(model, Z)
    if hasattr(model, "logit"):
        return model.logit
    return model


def _coalition_values(f, x, background, Z):
    """Mean model output with features in each row of ``Z`` taken from ``x``
    and the rest from each background row."""
    m, p = Z.shape
    K = background.shape[0]
    mixed = np.where(Z[:, None, :].astype(bool), x[None, None, :], background[None, :, :])
    return f(mixed.reshape(m * K, p)).reshape(m, K).mean(axis=1)


def _exact_shapley(f, x, background):
    p = x.size
    idx = np.arange(2**p)
    Z = ((idx[:, None] >> np.arange(p)) & 1).astype(np.int8)
    v = _coalition_values(f, x, background, Z)
    sizes = Z.sum(axis=1)
    weight = np.array([factorial(s) * factorial(p - s - 1) / factorial(p) for s in range(p)])
    phi = np.empty(p)
    for j in range(p):
        without = idx[Z[:, j] == 0]
        phi[j] = np.sum(weight[sizes[without]] * (v[without | (1 << j)] - v[without]))
    return phi


def _sampled_shapley(f, x, background, rng, n_coalitions):
    p = x.size
    sizes = np.arange(1, p)
    kernel = (p - 1) / (sizes * (p - sizes))
    kernel /= kernel.sum()
    half = n_coalitions // 2
    Z = np.zeros((2 * half, p), dtype=np.int8)
    draws = rng.choice(sizes, size=half, p=kernel)
    for r, s in enumerate(draws):
        on = rng.choice(p, size=s, replace=False)
        Z[2 * r, on] = 1
    Z[1::2] = 1 - Z[0::2]
    v = _coalition_values(f, x, background, Z)
    ends = _coalition_values(f, x, background, np.array([np.zeros(p), np.ones(p)], dtype=np.int8))
    v0, v1 = ends
    total = v1 - v0
    # efficiency constraint: eliminate the last player
    A = Z[:, :-1] - Z[:, -1:]
    b = v - v0 - Z[:, -1] * total
    head, *_ = np.linalg.lstsq(A.astype(float), b, rcond=None)
    return np.append(head, total - head.sum())


def kernel_shap(
    model,
    background: np.ndarray,
    X_explain: np.ndarray,
    *,
    method: str = "auto",
    n_coalitions: int = N_COALITIONS,
    seed: int = 0,
    column_map=None,
    variables=None,
) -> AttributionMatrix:
    """Shapley values of the logit with absent features filled in from each
    background row (interventional), averaged over the background.

    ``method="auto"`` enumerates all coalitions when p <= 12 and otherwise
    fits the weighted least-squares estimator on ``n_coalitions`` paired
    coalitions drawn from the Shapley kernel. Both satisfy local accuracy:
    each row sums to ``f(x) - mean_b f(b)``.
    """
    f = _as_logit_fn(model)
    B = np.atleast_2d(np.asarray(background, dtype=float))
    X = np.atleast_2d(np.asarray(X_explain, dtype=float))
    p = X.shape[1]
    if method == "auto":
        method = "exact" if p <= EXACT_MAX_FEATURES else "sampled"
    if method == "exact" and p > EXACT_HARD_LIMIT:
        raise ValueError(f"exact Shapley enumeration limited to {EXACT_HARD_LIMIT} features, got {p}")
    rng = np.random.default_rng(seed)
    out = np.empty_like(X)
    for r, x in enumerate(X):
        if method == "exact" or p < 2:
            out[r] = _exact_shapley(f, x, B)
        elif method == "sampled":
            out[r] = _sampled_shapley(f, x, B, rng, n_coalitions)
        else:
            raise ValueError(f"unknown method {method!r}")
    cm, names = _identity_map(p, column_map, variables)
    return AttributionMatrix(out, cm, names)


def linear_shap(params: ModelParams, background: np.ndarray, X: np.ndarray, column_map=None, variables=None) -> AttributionMatrix:
    """Closed-form Shapley values of a linear logit: ``w_j (x_j - mean_b_j)``."""
    if params.spec.kind != LR:
        raise ValueError("linear_shap needs a logistic-regression model")
    w, _ = params.unpack()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mu = np.atleast_2d(np.asarray(background, dtype=float)).mean(axis=0)
    cm, names = _identity_map(X.shape[1], column_map, variables)
    return AttributionMatrix((X - mu) * w, cm, names)


def normalized_importance(attrs: AttributionMatrix, subset_size: int = 50) -> ImportanceScores:
    """Mean |attribution| over the first ``subset_size`` rows, summed over each
    variable's encoded columns, divided by the largest variable score."""
    rows = attrs.values[: min(subset_size, attrs.values.shape[0])]
    per_column = np.abs(rows).mean(axis=0)
    per_var = np.zeros(len(attrs.variables))
    np.add.at(per_var, np.asarray(attrs.column_map, dtype=int), per_column)
    top = per_var.max() if per_var.size else 0.0
    if top > 0:
        per_var = per_var / top
    return ImportanceScores(attrs.variables, tuple(float(s) for s in per_var))


"""Synthetic benchmark with a known causal graph and a train/test shift.

Two standard-normal causes drive a binary label through a logistic link with
an interaction term. A proxy and a spurious feature are both generated from
the label; in the test environment the spurious feature is replaced by wide,
label-independent noise. A fifth feature is pure noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dag import DAG
from .dataset import Continuous, Dataset

FEATURES = ("X1", "X2", "Xproxy", "Xspur", "Xnoise")
TARGET = "Y"
LABEL_SHIFT = 2.0
TEST_SPUR_VARIANCE = 9.0


@dataclass(frozen=True)
class SynthConfig:
    n: int
    mode: str = "train"
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.mode not in ("train", "test"):
            raise ValueError("mode must be 'train' or 'test'")


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def label_probability(x1, x2):
    return sigmoid(1.5 * np.asarray(x1) + 1.5 * np.asarray(x2) + 2.0 * np.asarray(x1) * np.asarray(x2))


def generate(cfg: SynthConfig) -> Dataset:
    """Draw ``cfg.n`` rows. Columns are drawn from one PCG64 stream seeded
    with ``cfg.seed`` in the order X1, X2, Xnoise, Y, Xproxy, Xspur."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    x1 = rng.standard_normal(n)
    x2 = rng.standard_normal(n)
    noise = rng.standard_normal(n)
    y = (rng.random(n) < label_probability(x1, x2)).astype(float)
    mu = np.where(y == 1, LABEL_SHIFT, -LABEL_SHIFT)
    proxy = mu + rng.standard_normal(n)
    if cfg.mode == "train":
        spur = mu + rng.standard_normal(n)
    else:
        spur = np.sqrt(TEST_SPUR_VARIANCE) * rng.standard_normal(n)
    rows = np.column_stack([x1, x2, proxy, spur, noise])
    return Dataset(
        FEATURES,
        tuple(Continuous() for _ in FEATURES),
        rows,
        y,
        TARGET,
        {"seed": cfg.seed, "mode": cfg.mode},
    )


def ground_truth_graph() -> DAG:
    """Data-generating graph, including the unobserved environment node E."""
    return DAG(
        ("X1", "X2", "Xproxy", "Xspur", "Xnoise", "E", "Y"),
        [("X1", "Y"), ("X2", "Y"), ("Y", "Xproxy"), ("Y", "Xspur"), ("E", "Xspur")],
    )


TRUE_MASK = {"X1": 1, "X2": 1, "Xproxy": 0, "Xspur": 0, "Xnoise": 0}

"""Adaptive causal regularization: penalize attribution mass on features the
causal mask does not mark as robust predictors of the target."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attribution import AttributionMatrix
from .dataset import Dataset, EncodedMatrix, StandardizeStats, one_hot_encode, standardize
from .fci import PAG, CausalMask, extract_mask
from .model import MLP, ModelSpec, TrainConfig, TrainedModel, train


@dataclass(frozen=True)
class ACRConfig:
    lam: float
    model: str = MLP
    hidden_dim: int = 32
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")


def acr_penalty(S, mask_on_columns) -> float:
    """``mean_i sum_j |S_ij| (1 - A_j)`` for an attribution matrix ``S``."""
    S = S.values if isinstance(S, AttributionMatrix) else np.asarray(S, dtype=float)
    A = np.asarray(mask_on_columns, dtype=float)
    if S.ndim != 2 or A.shape != (S.shape[1],):
        raise ValueError("mask length must match the attribution width")
    return float(np.abs(S).sum(axis=0) @ (1.0 - A) / S.shape[0])


def broadcast_mask(mask: CausalMask, column_map) -> np.ndarray:
    """Per-variable mask to per-encoded-column mask."""
    values = np.asarray(mask.values, dtype=float)
    return values[np.asarray(column_map, dtype=int)]


def _resolve_mask(data: Dataset, pag_or_mask) -> CausalMask:
    if isinstance(pag_or_mask, PAG):
        mask = extract_mask(pag_or_mask, data.target_name)
    elif isinstance(pag_or_mask, CausalMask):
        mask = pag_or_mask
    else:
        mask = CausalMask(tuple(pag_or_mask), tuple(int(v) for v in dict(pag_or_mask).values()))
    if set(mask.names) != set(data.names):
        raise ValueError(f"mask covers {sorted(mask.names)}, data has {sorted(data.names)}")
    # reorder to the data's column order
    lookup = mask.as_dict()
    return CausalMask(data.names, tuple(lookup[n] for n in data.names))


def prepare(data: Dataset, stats: StandardizeStats | None = None) -> tuple[EncodedMatrix, StandardizeStats]:
    """Standardize continuous columns then one-hot encode categoricals."""
    scaled, stats = standardize(data, stats)
    return one_hot_encode(scaled), stats


def fit_acr(data: Dataset, pag_or_mask, cfg: ACRConfig) -> TrainedModel:
    mask = _resolve_mask(data, pag_or_mask)
    enc, stats = prepare(data)
    cols = broadcast_mask(mask, enc.column_map)
    spec = ModelSpec(cfg.model, enc.p, cfg.hidden_dim, cfg.seed)
    tcfg = TrainConfig(**{**cfg.train.to_json(), "lam": cfg.lam, "early_stopping": cfg.train.early_stopping})
    model = train(spec, tcfg, enc.values, data.y, cols)
    extras = {
        "lambda": cfg.lam,
        "mask": mask.as_dict(),
        "standardize": stats.to_json(),
        "encoded_columns": list(enc.names),
        "column_map": list(enc.column_map),
    }
    return TrainedModel(model.spec, model.params, model.config, model.loss_curve, model.stopped_early, extras)


def predict_proba(model: TrainedModel, data: Dataset) -> np.ndarray:
    """Apply a model returned by :func:`fit_acr` to raw data."""
    stats = StandardizeStats.from_json(model.extras["standardize"])
    enc, _ = prepare(data, stats)
    return model.predict_proba(enc.values)

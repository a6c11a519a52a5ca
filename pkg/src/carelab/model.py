"""Logistic regression and one-hidden-layer ReLU networks in plain numpy.

Both models expose their logit, its input gradient, the binary
cross-entropy with its parameter gradient, and the attribution penalty with
its parameter gradient. The penalty gradient differentiates through the
input gradient ("double backpropagation"); ReLU on/off pattern and the sign
of each attribution are held fixed, i.e. the second derivative of ReLU and
of ``|.|`` are taken as zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

LR, MLP = "lr", "mlp"
BETA1, BETA2, ADAM_EPS = 0.9, 0.999, 1e-8
DEFAULT_LR = {LR: 1e-2, MLP: 1e-3}


class TrainingDivergedError(FloatingPointError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    input_dim: int
    hidden_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (LR, MLP):
            raise ValueError(f"kind must be {LR!r} or {MLP!r}")
        if self.input_dim < 0 or self.hidden_dim < 1:
            raise ValueError("dimensions must be positive")

    @property
    def n_params(self) -> int:
        p, h = self.input_dim, self.hidden_dim
        return p + 1 if self.kind == LR else h * p + h + h + 1


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Flat parameter vector; the named views below slice into it.

    LR layout: ``[w (p), b]``. MLP layout: ``[W1 (h*p, row-major), b1 (h),
    w2 (h), b2]``.
    """

    spec: ModelSpec
    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).ravel()
        if theta.size != self.spec.n_params:
            raise ValueError(f"expected {self.spec.n_params} parameters, got {theta.size}")
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    def unpack(self):
        p, h, t = self.spec.input_dim, self.spec.hidden_dim, self.theta
        if self.spec.kind == LR:
            return t[:p], t[p]
        W1 = t[: h * p].reshape(h, p)
        b1 = t[h * p : h * p + h]
        w2 = t[h * p + h : h * p + 2 * h]
        return W1, b1, w2, t[-1]

    @classmethod
    def pack(cls, spec: ModelSpec, *arrays) -> ModelParams:
        return cls(spec, np.concatenate([np.ravel(a) for a in arrays]))

    def to_json(self) -> dict:
        return {"spec": asdict(self.spec), "theta": self.theta.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> ModelParams:
        return cls(ModelSpec(**obj["spec"]), np.array(obj["theta"]))


def init(spec: ModelSpec) -> ModelParams:
    """Xavier-normal weights (variance 2 / (fan_in + fan_out)), zero biases."""
    rng = np.random.default_rng(spec.seed)
    p, h = spec.input_dim, spec.hidden_dim
    if spec.kind == LR:
        w = rng.normal(0.0, math.sqrt(2.0 / (p + 1)), size=p)
        return ModelParams.pack(spec, w, [0.0])
    W1 = rng.normal(0.0, math.sqrt(2.0 / (p + h)), size=(h, p))
    w2 = rng.normal(0.0, math.sqrt(2.0 / (h + 1)), size=h)
    return ModelParams.pack(spec, W1, np.zeros(h), w2, [0.0])


def _check(params: ModelParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.spec.input_dim:
        raise ValueError(f"expected an N x {params.spec.input_dim} matrix, got shape {X.shape}")
    return X


def forward_logit(params: ModelParams, X: np.ndarray) -> np.ndarray:
    X = _check(params, X)
    if params.spec.kind == LR:
        w, b = params.unpack()
        return X @ w + b
    W1, b1, w2, b2 = params.unpack()
    return np.maximum(X @ W1.T + b1, 0.0) @ w2 + b2


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def predict_proba(params: ModelParams, X: np.ndarray) -> np.ndarray:
    return sigmoid(forward_logit(params, X))


def loss_and_grad(params: ModelParams, X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy on the logit and its exact gradient."""
    X = _check(params, X)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if params.spec.kind == LR:
        w, b = params.unpack()
        z = X @ w + b
    else:
        W1, b1, w2, b2 = params.unpack()
        pre = X @ W1.T + b1
        hid = np.maximum(pre, 0.0)
        z = hid @ w2 + b2
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    dz = (sigmoid(z) - y) / n
    if params.spec.kind == LR:
        return loss, np.concatenate([X.T @ dz, [dz.sum()]])
    dpre = (dz[:, None] * w2) * (pre > 0)
    grad = np.concatenate([(dpre.T @ X).ravel(), dpre.sum(axis=0), hid.T @ dz, [dz.sum()]])
    return loss, grad


def input_gradient(params: ModelParams, X: np.ndarray) -> np.ndarray:
    """``d logit_i / d x_ij`` for every row and column."""
    X = _check(params, X)
    if params.spec.kind == LR:
        w, _ = params.unpack()
        return np.broadcast_to(w, X.shape).copy()
    W1, b1, w2, _ = params.unpack()
    active = (X @ W1.T + b1) > 0
    return (active * w2) @ W1


def penalty_value_and_param_grad(
    params: ModelParams, X: np.ndarray, mask_on_columns: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean absolute gradient-times-input mass on masked-out columns.

    ``omega = mean_i sum_j |x_ij * dlogit_i/dx_ij| * (1 - A_j)``.
    """
    X = _check(params, X)
    A = np.asarray(mask_on_columns, dtype=float)
    if A.shape != (X.shape[1],):
        raise ValueError("mask length must equal the number of encoded columns")
    off = 1.0 - A
    n = X.shape[0]
    if params.spec.kind == LR:
        w, _ = params.unpack()
        S = X * w
        omega = float(np.abs(S).sum(axis=0) @ off / n)
        gw = (np.sign(S) * X).sum(axis=0) * off / n
        return omega, np.concatenate([gw, [0.0]])
    W1, b1, w2, _ = params.unpack()
    active = ((X @ W1.T + b1) > 0).astype(float)
    G = (active * w2) @ W1
    S = X * G
    omega = float(np.abs(S).sum(axis=0) @ off / n)
    # upstream gradient w.r.t. the input-gradient entries
    U = np.sign(S) * X * off / n
    UW = U @ W1.T  # (n, h)
    g_w2 = (active * UW).sum(axis=0)
    g_W1 = w2[:, None] * (active.T @ U)
    h = params.spec.hidden_dim
    return omega, np.concatenate([g_W1.ravel(), np.zeros(h), g_w2, [0.0]])


def objective_and_grad(
    params: ModelParams, X: np.ndarray, y: np.ndarray, mask_on_columns: np.ndarray, lam: float
) -> tuple[float, np.ndarray]:
    """``loss + lam * omega`` and its gradient in one pass (the hidden layer
    is shared between both terms)."""
    if params.spec.kind == LR:
        loss, g = loss_and_grad(params, X, y)
        omega, g_pen = penalty_value_and_param_grad(params, X, mask_on_columns)
        return loss + lam * omega, g + lam * g_pen
    n = X.shape[0]
    off = 1.0 - np.asarray(mask_on_columns, dtype=float)
    W1, b1, w2, b2 = params.unpack()
    pre = X @ W1.T + b1
    on = pre > 0
    active = on.astype(float)
    hid = pre * active
    z = hid @ w2 + b2
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    dz = (sigmoid(z) - y) / n
    G = (active * w2) @ W1
    S = X * G
    omega = float(np.abs(S).sum(axis=0) @ off / n)
    U = np.sign(S) * X * (lam * off / n)
    dpre = active * (dz[:, None] * w2)
    g_W1 = dpre.T @ X + w2[:, None] * (active.T @ U)
    g_w2 = hid.T @ dz + (active * (U @ W1.T)).sum(axis=0)
    grad = np.concatenate([g_W1.ravel(), dpre.sum(axis=0), g_w2, [dz.sum()]])
    return loss + lam * omega, grad


# ---------------------------------------------------------------- optimizer


@dataclass(frozen=True, eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> AdamState:
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(state: AdamState, params: ModelParams, grad: np.ndarray, lr: float) -> tuple[AdamState, ModelParams]:
    grad = np.asarray(grad, dtype=float)
    if grad.shape != params.theta.shape:
        raise ValueError("gradient shape does not match parameters")
    t = state.t + 1
    m = BETA1 * state.m + (1.0 - BETA1) * grad
    v = BETA2 * state.v + (1.0 - BETA2) * grad * grad
    m_hat = m / (1.0 - BETA1**t)
    v_hat = v / (1.0 - BETA2**t)
    theta = params.theta - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return AdamState(m, v, t), ModelParams(params.spec, theta)


# ----------------------------------------------------------------- training


@dataclass(frozen=True)
class EarlyStopping:
    enabled: bool = False
    min_iters: int = 100
    patience: int = 30
    tol: float = 1e-5


@dataclass(frozen=True)
class TrainConfig:
    max_iters: int = 1000
    learning_rate: float | None = None
    weight_decay: float = 0.0
    early_stopping: EarlyStopping = field(default_factory=EarlyStopping)
    lam: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")

    def to_json(self) -> dict:
        return asdict(self)


class StopMonitor:
    """Stops once ``patience`` consecutive iterations after ``min_iters``
    each changed the monitored value by at most ``tol``."""

    def __init__(self, cfg: EarlyStopping):
        self.cfg = cfg
        self.iteration = 0
        self.stalled = 0
        self.last = None

    def update(self, value: float) -> bool:
        self.iteration += 1
        if self.iteration > self.cfg.min_iters and self.last is not None:
            if abs(value - self.last) <= self.cfg.tol:
                self.stalled += 1
            else:
                self.stalled = 0
        self.last = value
        return self.cfg.enabled and self.stalled >= self.cfg.patience


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ModelSpec
    params: ModelParams
    config: TrainConfig
    loss_curve: tuple[float, ...]
    stopped_early: bool = False
    extras: dict = field(default_factory=dict)

    @property
    def n_iters(self) -> int:
        return len(self.loss_curve)

    def logit(self, X: np.ndarray) -> np.ndarray:
        return forward_logit(self.params, X)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return predict_proba(self.params, X)

    def to_json(self) -> dict:
        return {
            "spec": asdict(self.spec),
            "params": self.params.theta.tolist(),
            "config": self.config.to_json(),
            "loss_curve": list(self.loss_curve),
            "stopped_early": self.stopped_early,
            "extras": self.extras,
        }

    @classmethod
    def from_json(cls, obj: dict) -> TrainedModel:
        spec = ModelSpec(**obj["spec"])
        cfg = dict(obj["config"])
        cfg["early_stopping"] = EarlyStopping(**cfg["early_stopping"])
        return cls(
            spec,
            ModelParams(spec, np.array(obj["params"])),
            TrainConfig(**cfg),
            tuple(obj["loss_curve"]),
            obj.get("stopped_early", False),
            obj.get("extras", {}),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def train(
    spec: ModelSpec,
    cfg: TrainConfig,
    X: np.ndarray,
    y: np.ndarray,
    mask: np.ndarray | None = None,
) -> TrainedModel:
    """Full-batch Adam on cross-entropy + lam * penalty (+ L2 weight decay).

    ``mask`` is the per-encoded-column 0/1 vector; ``None`` means all ones.
    Early stopping, when enabled, watches the total objective.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    params = init(spec)
    lr = cfg.learning_rate if cfg.learning_rate is not None else DEFAULT_LR[spec.kind]
    use_penalty = cfg.lam > 0 and mask is not None and not np.all(np.asarray(mask) == 1)
    state = AdamState.zeros(spec.n_params)
    monitor = StopMonitor(cfg.early_stopping)
    curve = []
    stopped = False
    for _ in range(cfg.max_iters):
        if use_penalty:
            obj, grad = objective_and_grad(params, X, y, mask, cfg.lam)
        else:
            obj, grad = loss_and_grad(params, X, y)
        if cfg.weight_decay:
            obj += 0.5 * cfg.weight_decay * float(params.theta @ params.theta)
            grad = grad + cfg.weight_decay * params.theta
        if not (math.isfinite(obj) and np.all(np.isfinite(grad))):
            raise TrainingDivergedError(
                f"non-finite objective at iteration {len(curve) + 1}; try a smaller learning rate (now {lr})"
            )
        curve.append(obj)
        state, params = adam_step(state, params, grad, lr)
        if monitor.update(obj):
            stopped = True
            break
    return TrainedModel(spec, params, replace(cfg, learning_rate=lr), tuple(curve), stopped)

"""Kernel regression network for residual prediction.

Features of a joint configuration are its inner products against a stored
set of reference configurations.  One sigmoid hidden layer maps features to
a scalar length correction:

    h1 = w1 * K + b1 (elementwise),  h2 = logistic(h1),  out = w2 . h2 + b2

trained by full-batch gradient descent on a ridge-regularized squared loss
    0.5 * lambda1 * ||w2||^2 + (1/2n) * sum(e^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kinematics as kin
from .. import measurement as ms
from ..errors import DivergedError, InvalidArgumentError
from .base import IdentificationResult, rmse, train_arrays


@dataclass(frozen=True)
class SVMConfig:
    hidden_width: int = 64
    lambda1: float = 1e-6
    learning_rate: float = 0.1
    epochs: int = 1500
    init: object = "default"  # "default" | "zero" | (w1, b1, w2, b2)
    seed: int = 0

    def __post_init__(self):
        if self.hidden_width < 1:
            raise InvalidArgumentError("hidden_width must be >= 1")
        if not (np.isfinite(self.lambda1) and self.lambda1 >= 0):
            raise InvalidArgumentError("lambda1 must be finite and >= 0")
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise InvalidArgumentError("learning_rate must be > 0")
        if self.epochs < 0:
            raise InvalidArgumentError("epochs must be >= 0")


def _sigmoid(z):
    # split by sign so exp never sees a large positive argument
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class SVMPredictor:
    """Trained network; callable on joint configurations (singly or batched)."""

    refs: np.ndarray   # (H, 6) reference configurations
    w1: np.ndarray     # (H,)
    b1: np.ndarray     # (H,)
    w2: np.ndarray     # (H,)
    b2: float
    history: tuple[float, ...] = ()

    def __call__(self, joints) -> np.ndarray:
        q = np.asarray(joints, dtype=float)
        feats = q @ self.refs.T
        h2 = _sigmoid(self.w1 * feats + self.b1)
        return h2 @ self.w2 + self.b2

    def to_dict(self) -> dict:
        return {
            "refs": self.refs.tolist(),
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": float(self.b2),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SVMPredictor":
        return cls(
            refs=np.asarray(d["refs"], dtype=float),
            w1=np.asarray(d["w1"], dtype=float),
            b1=np.asarray(d["b1"], dtype=float),
            w2=np.asarray(d["w2"], dtype=float),
            b2=float(d["b2"]),
        )


def loss_and_grads(w1, b1, w2, b2, feats, targets, lambda1):
    """Regularized squared loss and its analytic gradients.

    feats: (n, H) kernel features; targets: (n,).  Returns
    (loss, dw1, db1, dw2, db2).
    """
    h1 = w1 * feats + b1
    h2 = _sigmoid(h1)
    out = h2 @ w2 + b2
    e = targets - out
    n = len(targets)
    loss = 0.5 * lambda1 * float(w2 @ w2) + float(e @ e) / (2 * n)
    back = e[:, None] * (w2 * h2 * (1.0 - h2))  # (n, H)
    dw2 = lambda1 * w2 - (h2.T @ e) / n
    db2 = -float(e.sum()) / n
    dw1 = -(back * feats).sum(axis=0) / n
    db1 = -back.sum(axis=0) / n
    return loss, dw1, db1, dw2, db2


def _initial_params(cfg: SVMConfig, width, targets, rng, feats):
    if isinstance(cfg.init, str):
        if cfg.init == "zero":
            return (np.zeros(width), np.zeros(width), np.zeros(width), 0.0)
        if cfg.init == "default":
            # start every unit responsive: standardize its feature column,
            # with a random sign/scale so units differentiate during training

            std = feats.std(axis=0)
            std[std < 1e-12] = 1.0
            gain = rng.uniform(0.5, 1.5, width) * rng.choice([-1.0, 1.0], width)
            w1 = gain / std
            b1 = -w1 * feats.mean(axis=0)
            return (w1, b1, np.zeros(width), float(np.mean(targets)))
        if cfg.init == "small":
            return (
                0.01 * rng.standard_normal(width),
                np.zeros(width),
                np.zeros(width),
                float(np.mean(targets)),
            )
        raise InvalidArgumentError(f"unknown init scheme {cfg.init!r}")
    w1, b1, w2, b2 = cfg.init
    return (
        np.asarray(w1, dtype=float).copy(),
        np.asarray(b1, dtype=float).copy(),
        np.asarray(w2, dtype=float).copy(),
        float(b2),
    )


def svm_fit(joints, targets, cfg: SVMConfig | None = None) -> SVMPredictor:
    """Train a residual predictor on (joint configuration, residual) pairs.

    The best epoch by training RMSE is returned, so a run can never hand
    back something worse than its own starting point.  history[0] is the
    RMSE of predicting zero, then one entry per epoch.
    """
    cfg = cfg or SVMConfig()
    joints = np.asarray(joints, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if joints.ndim != 2 or joints.shape[1] != kin.N_JOINTS or len(joints) != len(targets):
        raise InvalidArgumentError("need matching (n, 6) joints and (n,) targets")
    n = len(targets)
    rng = np.random.default_rng(cfg.seed)
    ref_idx = np.linspace(0, n - 1, cfg.hidden_width).round().astype(int)
    refs = joints[ref_idx]
    feats = joints @ refs.T

    w1, b1, w2, b2 = _initial_params(cfg, cfg.hidden_width, targets, rng, feats)
    history = [rmse(targets)]

    def train_rmse(w1, b1, w2, b2):
        pred = _sigmoid(w1 * feats + b1) @ w2 + b2
        return rmse(targets - pred)

    def loss_of(w1, b1, w2, b2):
        e = targets - (_sigmoid(w1 * feats + b1) @ w2 + b2)
        return 0.5 * cfg.lambda1 * float(w2 @ w2) + float(e @ e) / (2 * n)

    best = (train_rmse(w1, b1, w2, b2), (w1.copy(), b1.copy(), w2.copy(), b2))
    step = cfg.learning_rate
    for _ in range(cfg.epochs):
        loss, dw1, db1, dw2, db2 = loss_and_grads(w1, b1, w2, b2, feats, targets, cfg.lambda1)
        if not np.isfinite(loss) or loss > 1e6:
            raise DivergedError(
                f"training diverged (loss={loss:.3g}); lower the learning rate"
            )
        # backtracking step along the negative gradient: halve until the
        # loss stops increasing, then let the step recover gradually
        for _ in range(30):
            trial = (w1 - step * dw1, b1 - step * db1, w2 - step * dw2, b2 - step * db2)
            if loss_of(*trial) <= loss:
                break
            step *= 0.5
        w1, b1, w2, b2 = trial
        step = min(step * 1.25, 1e3 * cfg.learning_rate)
        score = train_rmse(w1, b1, w2, b2)
        history.append(score)
        if score < best[0]:
            best = (score, (w1.copy(), b1.copy(), w2.copy(), b2))
    bw1, bb1, bw2, bb2 = best[1]
    return SVMPredictor(refs=refs, w1=bw1, b1=bb1, w2=bw2, b2=bb2,
                        history=tuple(history))


def svm_identify(dataset: ms.Dataset, model: ms.CableEncoderModel,
                 nominal: kin.DHChain, cfg: SVMConfig | None = None) -> IdentificationResult:
    """Learn the nominal chain's residuals directly as a function of joints."""
    cfg = cfg or SVMConfig()
    joints, _ = train_arrays(dataset)
    targets = ms.residuals(model, nominal, dataset)
    predictor = svm_fit(joints, targets, cfg)
    return IdentificationResult(
        method="svm",
        x_hat=None,
        residual_predictor=predictor,
        history=predictor.history,
        iterations=cfg.epochs,
        config=cfg,
    )

"""Shared result type and helpers for the identification algorithms."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .. import kinematics as kin
from .. import measurement as ms
from ..errors import InvalidArgumentError, ParseError

RESULT_FORMAT = "armcal-result"
RESULT_VERSION = 1


@dataclass(frozen=True)
class IdentificationResult:
    """Outcome of one identification run.

    At least one of ``x_hat`` (geometric parameter corrections) and
    ``residual_predictor`` (learned joints -> mm length correction) is
    present.  ``history`` holds the training RMSE trace: entry 0 is the
    pre-fit value, then one entry per iteration.
    """

    method: str
    x_hat: kin.KinematicErrorVector | None
    residual_predictor: object | None
    history: tuple[float, ...]
    iterations: int
    config: object | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.x_hat is None and self.residual_predictor is None:
            raise InvalidArgumentError("result needs x_hat or a residual predictor")
        hist = tuple(float(h) for h in self.history)
        if len(hist) == 0 or not all(np.isfinite(h) for h in hist):
            raise InvalidArgumentError("history must be non-empty and finite")
        object.__setattr__(self, "history", hist)


def corrected_residuals(result: IdentificationResult, model: ms.CableEncoderModel,
                        nominal: kin.DHChain, dataset: ms.Dataset) -> np.ndarray:
    """Residuals that remain after applying everything the result learned."""
    chain = nominal
    if result.x_hat is not None:
        chain = kin.apply_errors(nominal, result.x_hat)
    r = ms.residuals(model, chain, dataset)
    if result.residual_predictor is not None:
        r = r - result.residual_predictor(dataset.joints_matrix())
    return r


def rmse(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.sqrt(np.mean(v * v)))


def expand_groups(value, name: str) -> np.ndarray:
    """Broadcast a scalar / per-group 4-vector / full 24-vector to 24 values.

    Per-group values apply to (a, d, theta, alpha) in the flat ordering.
    """
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.shape == (1,):
        out = np.repeat(v, kin.N_PARAMS)
    elif v.shape == (4,):
        out = np.repeat(v, kin.N_JOINTS)
    elif v.shape == (kin.N_PARAMS,):
        out = v.copy()
    else:
        raise InvalidArgumentError(
            f"{name} must be scalar, one value per parameter group, or 24 values"
        )
    if not np.all(np.isfinite(out)):
        raise InvalidArgumentError(f"{name} must be finite")
    return out


def covariance_matrix(value, name: str) -> np.ndarray:
    """Normalize scalar / diagonal-vector / full-matrix input to 24x24 SPSD."""
    v = np.asarray(value, dtype=float)
    if v.ndim == 0:
        mat = np.eye(kin.N_PARAMS) * float(v)
    elif v.shape in ((4,), (kin.N_PARAMS,)):
        mat = np.diag(expand_groups(v, name))
    elif v.shape == (kin.N_PARAMS, kin.N_PARAMS):
        mat = v.copy()
    else:
        raise InvalidArgumentError(f"{name} must be scalar, diagonal values, or 24x24")
    if not np.all(np.isfinite(mat)):
        raise InvalidArgumentError(f"{name} must be finite")
    if np.abs(mat - mat.T).max() > 1e-9 * max(1.0, np.abs(mat).max()):
        raise InvalidArgumentError(f"{name} must be symmetric")
    mat = 0.5 * (mat + mat.T)
    min_eig = float(np.linalg.eigvalsh(mat).min())
    if min_eig < -1e-9 * max(1.0, np.abs(mat).max()):
        raise InvalidArgumentError(f"{name} must be positive semidefinite")
    return mat


def result_to_json(result: IdentificationResult) -> str:
    """Serialize what a result learned (not its fitting trace's config)."""
    payload = {
        "format": RESULT_FORMAT,
        "version": RESULT_VERSION,
        "method": result.method,
        "x_hat": None,
        "predictor": None,
        "history": [float(h) for h in result.history],
        "iterations": int(result.iterations),
    }
    if result.x_hat is not None:
        payload["x_hat"] = [float(v) for v in result.x_hat.flatten()]
    if result.residual_predictor is not None:
        payload["predictor"] = result.residual_predictor.to_dict()
    return json.dumps(payload, indent=2, sort_keys=True)


def result_from_json(text: str) -> IdentificationResult:
    from .svm import SVMPredictor  # deferred: svm imports this module

    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    if payload.get("format") != RESULT_FORMAT:
        raise ParseError(f"not an {RESULT_FORMAT} document")
    if payload.get("version") != RESULT_VERSION:
        raise ParseError(f"unsupported version {payload.get('version')!r}")
    x_hat = None
    if payload["x_hat"] is not None:
        x_hat = kin.KinematicErrorVector.from_flat(
            np.asarray(payload["x_hat"], dtype=float))
    predictor = None
    if payload["predictor"] is not None:
        predictor = SVMPredictor.from_dict(payload["predictor"])
    return IdentificationResult(
        method=payload["method"],
        x_hat=x_hat,
        residual_predictor=predictor,
        history=tuple(payload["history"]),
        iterations=int(payload["iterations"]),
    )


def save_result(path, result: IdentificationResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(result_to_json(result) + "\n")


def load_result(path) -> IdentificationResult:
    with open(path, "r", encoding="utf-8") as fh:
        return result_from_json(fh.read())


def train_arrays(dataset: ms.Dataset):
    return dataset.joints_matrix(), dataset.lengths()


def predicted_residual_matrix(model: ms.CableEncoderModel, nominal_arr,
                              candidates, joints) -> np.ndarray:
    """Residual vector each candidate error vector would produce, (N, n).

    Row i holds, for every training configuration, the length change caused
    by applying candidate i to the nominal chain — directly comparable to
    the measured residual vector.
    """
    candidates = np.asarray(candidates, dtype=float)
    tables = candidates.reshape(-1, 4, kin.N_JOINTS).transpose(0, 2, 1)
    params = nominal_arr + tables  # (N, 6, 4)
    pred = ms.cable_lengths(model, params[:, None, :, :], joints)
    base = ms.cable_lengths(model, nominal_arr, joints)
    return pred - base

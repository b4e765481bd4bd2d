"""Boosting-style combination of the base identifiers.

Stages are fitted one after another, each on the residuals the previous
stages left behind: stage m sees a pseudo-dataset whose measured lengths
have already been corrected by stages 1..m-1, fits its own model to what
remains, and contributes ``shrinkage * prediction`` to the running sum.  A
stage that would make the training residuals worse gets weight 0 and
changes nothing, which is what makes the training curve non-increasing.

Geometric stages (parameter-vector identifiers) predict through the length
difference between their corrected chain and the nominal chain; learning
stages predict lengths directly; a stage may do both.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import identify
from . import kinematics as kin
from . import measurement as ms
from .errors import CalibrationError, InvalidArgumentError, ParseError
from .evaluate import MetricTriple, compute_metrics
from .identify.base import rmse
from .identify.svm import SVMPredictor

FORMAT_NAME = "armcal-ensemble"
FORMAT_VERSION = 1

DEFAULT_ORDER = identify.METHOD_NAMES  # ekf, lm, pf, svm, ga, epf, lmga, sga


def stage_prediction(result, model: ms.CableEncoderModel, nominal: kin.DHChain,
                     joints) -> np.ndarray:
    """Length correction (mm) one fitted stage predicts at the given joints."""
    joints = np.asarray(joints, dtype=float)
    pred = np.zeros(joints.shape[:-1])
    if result.x_hat is not None:
        corrected = kin.apply_errors(nominal, result.x_hat).as_array()
        pred = pred + (ms.cable_lengths(model, corrected, joints)
                       - ms.cable_lengths(model, nominal.as_array(), joints))
    if result.residual_predictor is not None:
        pred = pred + result.residual_predictor(joints)
    return pred


@dataclass(frozen=True)
class EnsembleModel:
    stages: tuple                    # IdentificationResult per stage
    stage_weights: tuple[float, ...]  # 1.0, or 0.0 for rejected stages
    base_order: tuple[str, ...]
    shrinkage: float
    nominal: kin.DHChain
    model: ms.CableEncoderModel
    train_rmse_history: tuple[float, ...]  # pre-fit value, then per stage

    def __post_init__(self):
        if len(self.stages) == 0:
            raise InvalidArgumentError("ensemble needs at least one stage")
        if not all(0.0 <= w <= 1.0 for w in self.stage_weights):
            raise InvalidArgumentError("stage weights must lie in [0, 1]")
        if not (len(self.stages) == len(self.stage_weights) == len(self.base_order)):
            raise InvalidArgumentError("stages, weights, and order must align")

    def truncated(self, k: int) -> "EnsembleModel":
        """The same ensemble using only its first k stages."""
        if not 1 <= k <= len(self.stages):
            raise InvalidArgumentError(f"k must lie in [1, {len(self.stages)}]")
        return replace(
            self,
            stages=self.stages[:k],
            stage_weights=self.stage_weights[:k],
            base_order=self.base_order[:k],
            train_rmse_history=self.train_rmse_history[: k + 1],
        )


def ensemble_predict(e: EnsembleModel, joints) -> np.ndarray:
    """Sum of weighted, shrunk stage predictions at the given joints."""
    joints = np.asarray(joints, dtype=float)
    total = np.zeros(joints.shape[:-1])
    for result, weight in zip(e.stages, e.stage_weights):
        if weight == 0.0:
            continue
        total = total + weight * e.shrinkage * stage_prediction(
            result, e.model, e.nominal, joints)
    return total


def ensemble_residuals(e: EnsembleModel, dataset: ms.Dataset) -> np.ndarray:
    """measured - (nominal prediction + ensemble correction) per sample."""
    base = ms.residuals(e.model, e.nominal, dataset)
    return base - ensemble_predict(e, dataset.joints_matrix())


def _stage_entry(entry):
    if isinstance(entry, str):
        return entry, None
    name, cfg = entry
    return name, cfg


def boost_fit(train: ms.Dataset, model: ms.CableEncoderModel, nominal: kin.DHChain,
              base_order=DEFAULT_ORDER, shrinkage: float = 1.0,
              seed: int = 0) -> EnsembleModel:
    """Fit the stage sequence by stage-wise residual fitting.

    base_order entries are method names or (name, config) pairs.  When a
    config is not given explicitly, the method default is used with its
    seed displaced by the stage index, so stages never share random streams.
    A stage that raises aborts the whole fit, naming the stage.
    """
    if len(base_order) == 0:
        raise InvalidArgumentError("base_order must not be empty")
    if not 0.0 < shrinkage <= 1.0:
        raise InvalidArgumentError("shrinkage must lie in (0, 1]")

    joints = train.joints_matrix()
    # running state: measured lengths minus the corrections applied so far;
    # stage 1 therefore sees exactly the original dataset
    current = train
    stages, weights, order = [], [], []
    history = [rmse(ms.residuals(model, nominal, current))]
    for m, entry in enumerate(base_order):
        name, cfg = _stage_entry(entry)
        if cfg is None:
            cfg = identify.reseeded(identify.default_config(name), seed + m)
        try:
            result = identify.fit_method(name, current, model, nominal, config=cfg)
        except CalibrationError as exc:
            raise CalibrationError(
                f"ensemble stage {m + 1} ({name}) failed: {exc}"
            ) from exc
        pred = stage_prediction(result, model, nominal, joints)
        before = ms.residuals(model, nominal, current)
        after = before - shrinkage * pred
        weight = 1.0 if rmse(after) <= rmse(before) else 0.0
        if weight == 1.0:
            corrected = tuple(
                ms.Sample(s.joints, s.measured_length - shrinkage * p)
                for s, p in zip(current.samples, pred)
            )
            current = ms.Dataset(corrected, seed=current.seed)
        stages.append(result)
        weights.append(weight)
        order.append(name)
        history.append(rmse(ms.residuals(model, nominal, current)))
    return EnsembleModel(
        stages=tuple(stages),
        stage_weights=tuple(weights),
        base_order=tuple(order),
        shrinkage=float(shrinkage),
        nominal=nominal,
        model=model,
        train_rmse_history=tuple(history),
    )


def aggregation_curve(train: ms.Dataset, test: ms.Dataset,
                      model: ms.CableEncoderModel, nominal: kin.DHChain,
                      base_order=DEFAULT_ORDER, shrinkage: float = 1.0,
                      seed: int = 0) -> list[tuple[int, MetricTriple]]:
    """Test metrics of the ensemble truncated to k = 1..len(base_order) stages."""
    fitted = boost_fit(train, model, nominal, base_order, shrinkage, seed)
    rows = []
    for k in range(1, len(fitted.stages) + 1):
        r = ensemble_residuals(fitted.truncated(k), test)
        rows.append((k, compute_metrics(r)))
    return rows


# --- serialization ---

def _stage_to_dict(result) -> dict:
    d = {"method": result.method, "x_hat": None, "predictor": None}
    if result.x_hat is not None:
        d["x_hat"] = [float(v) for v in result.x_hat.flatten()]
    if result.residual_predictor is not None:
        d["predictor"] = result.residual_predictor.to_dict()
    return d


def _stage_from_dict(d: dict):
    x_hat = None
    if d["x_hat"] is not None:
        x_hat = kin.KinematicErrorVector.from_flat(np.asarray(d["x_hat"], dtype=float))
    predictor = None
    if d["predictor"] is not None:
        predictor = SVMPredictor.from_dict(d["predictor"])
    return identify.IdentificationResult(
        method=d["method"], x_hat=x_hat, residual_predictor=predictor,
        history=(0.0,), iterations=0,
    )


def ensemble_to_json(e: EnsembleModel) -> str:
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "shrinkage": e.shrinkage,
        "base_order": list(e.base_order),
        "stage_weights": [float(w) for w in e.stage_weights],
        "stages": [_stage_to_dict(s) for s in e.stages],
        "nominal": e.nominal.as_array().tolist(),
        "anchor": e.model.anchor.tolist(),
        "length_offset": e.model.length_offset,
        "train_rmse_history": [float(h) for h in e.train_rmse_history],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def ensemble_from_json(text: str) -> EnsembleModel:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    if payload.get("format") != FORMAT_NAME:
        raise ParseError(f"not an {FORMAT_NAME} document")
    if payload.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported version {payload.get('version')!r}")
    return EnsembleModel(
        stages=tuple(_stage_from_dict(d) for d in payload["stages"]),
        stage_weights=tuple(float(w) for w in payload["stage_weights"]),
        base_order=tuple(payload["base_order"]),
        shrinkage=float(payload["shrinkage"]),
        nominal=kin.DHChain.from_array(np.asarray(payload["nominal"], dtype=float)),
        model=ms.CableEncoderModel(
            anchor=np.asarray(payload["anchor"], dtype=float),
            length_offset=float(payload["length_offset"]),
        ),
        train_rmse_history=tuple(float(h) for h in payload["train_rmse_history"]),
    )


def save_ensemble(path, e: EnsembleModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(ensemble_to_json(e) + "\n")


def load_ensemble(path) -> EnsembleModel:
    with open(path, "r", encoding="utf-8") as fh:
        return ensemble_from_json(fh.read())

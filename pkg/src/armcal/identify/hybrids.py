"""Hybrid identifiers built from the base algorithms.

* epf  — particle filter whose particles are each nudged by one Kalman
  update (on the next training sample, round-robin) before weighting.
* lmga — genetic global search followed by damped-least-squares polish,
  kept only if the polish actually helps on training data.
* sga  — genetic search for the geometric part, then a residual network
  trained on whatever the corrected chain still cannot explain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kinematics as kin
from .. import measurement as ms
from ..errors import NumericalFailureError
from .base import (IdentificationResult, predicted_residual_matrix, rmse,
                   train_arrays)
from .ekf import EKFConfig, scalar_update
from .ga import GAConfig, ga_identify
from .lm import LMConfig, lm_identify
from .pf import PFConfig, normalized_weights, systematic_resample
from .svm import SVMConfig, svm_fit


def _epf_pf_default() -> PFConfig:
    return PFConfig(n_particles=200, U_sigma=(0.2, 0.2, 0.001, 0.001),
                    decay=0.95, iterations=120)


@dataclass(frozen=True)
class EPFConfig:
    pf: PFConfig = field(default_factory=_epf_pf_default)
    ekf: EKFConfig = field(default_factory=EKFConfig)


@dataclass(frozen=True)
class LMGAConfig:
    ga: GAConfig = field(default_factory=GAConfig)
    lm: LMConfig = field(default_factory=LMConfig)


@dataclass(frozen=True)
class SGAConfig:
    ga: GAConfig = field(default_factory=GAConfig)
    svm: SVMConfig = field(default_factory=SVMConfig)


def epf_identify(dataset: ms.Dataset, model: ms.CableEncoderModel,
                 nominal: kin.DHChain, pf_cfg: PFConfig | None = None,
                 ekf_cfg: EKFConfig | None = None) -> IdentificationResult:
    """Particle filter with Kalman-refined particles.

    Iteration k diffuses the cloud, applies one scalar Kalman update per
    particle against training sample k mod n (each particle carries its own
    covariance), then weights, estimates, and resamples exactly like the
    plain particle filter.  ekf_cfg.passes is ignored here: the pass
    structure is the particle iteration itself.
    """
    pf_cfg = pf_cfg or _epf_pf_default()
    ekf_cfg = ekf_cfg or EKFConfig()
    rng = np.random.default_rng(pf_cfg.seed)
    joints, lengths = train_arrays(dataset)
    n = len(lengths)
    nominal_arr = nominal.as_array()
    measured_residual = lengths - ms.cable_lengths(model, nominal_arr, joints)

    N = pf_cfg.n_particles
    X = pf_cfg.prior_center + rng.standard_normal((N, kin.N_PARAMS)) * pf_cfg.prior_sigma
    P = np.broadcast_to(ekf_cfg.P0, (N,) + ekf_cfg.P0.shape).copy()
    history = [rmse(measured_residual)]
    weight_sums = []
    estimate = pf_cfg.prior_center.copy()
    for k in range(pf_cfg.iterations):
        X = X + rng.standard_normal(X.shape) * (pf_cfg.U_sigma * pf_cfg.decay**k)
        i = k % n
        tables = X.reshape(-1, 4, kin.N_JOINTS).transpose(0, 2, 1)
        params = nominal_arr + tables
        predicted_i = ms.cable_lengths(model, params, joints[i])
        jrows = ms.length_jacobian(model, params, joints[i])
        P = P + ekf_cfg.Q
        S = np.einsum("pi,pij,pj->p", jrows, P, jrows) + ekf_cfg.R
        if not (np.all(np.isfinite(S)) and np.all(S > 0)):
            raise NumericalFailureError(
                f"innovation covariance not positive at sample {i}"
            )
        X, P, _ = scalar_update(X, P, jrows, lengths[i] - predicted_i, ekf_cfg.R)

        predicted = predicted_residual_matrix(model, nominal_arr, X, joints)
        log_w = -0.5 * np.sum((measured_residual - predicted) ** 2, axis=1) / pf_cfg.R
        w = normalized_weights(log_w)
        weight_sums.append(float(w.sum()))
        estimate = w @ X
        est_params = nominal_arr + kin.flat_to_table(estimate)
        history.append(rmse(lengths - ms.cable_lengths(model, est_params, joints)))
        if 1.0 / np.sum(w * w) < pf_cfg.resample_threshold * N:
            keep = systematic_resample(w, rng)
            X = X[keep]
            P = P[keep]
    return IdentificationResult(
        method="epf",
        x_hat=kin.KinematicErrorVector.from_flat(estimate),
        residual_predictor=None,
        history=tuple(history),
        iterations=pf_cfg.iterations,
        config=EPFConfig(pf=pf_cfg, ekf=ekf_cfg),
        diagnostics={"weight_sums": tuple(weight_sums)},
    )


def lmga_identify(dataset: ms.Dataset, model: ms.CableEncoderModel,
                  nominal: kin.DHChain, ga_cfg: GAConfig | None = None,
                  damping: float = 0.01, lm_iterations: int = 20) -> IdentificationResult:
    """Global genetic search, then local damped-least-squares refinement.

    The refinement is accepted only if it does not worsen the training RMSE
    reached by the search stage.
    """
    ga_res = ga_identify(dataset, model, nominal, ga_cfg)
    lm_res = lm_identify(dataset, model, nominal, damping, lm_iterations,
                         x0=ga_res.x_hat.flatten())
    polish_accepted = lm_res.history[-1] <= ga_res.history[-1]
    if polish_accepted:
        x_hat = lm_res.x_hat
        history = ga_res.history + lm_res.history[1:]
    else:
        x_hat = ga_res.x_hat
        history = ga_res.history
    return IdentificationResult(
        method="lmga",
        x_hat=x_hat,
        residual_predictor=None,
        history=history,
        iterations=ga_res.iterations + lm_res.iterations,
        config=LMGAConfig(ga=ga_res.config, lm=LMConfig(damping, lm_iterations)),
        diagnostics={
            "polish_accepted": polish_accepted,
            "ga_train_rmse": ga_res.history[-1],
            "lm_train_rmse": lm_res.history[-1],
        },
    )


def sga_identify(dataset: ms.Dataset, model: ms.CableEncoderModel,
                 nominal: kin.DHChain, ga_cfg: GAConfig | None = None,
                 svm_cfg: SVMConfig | None = None) -> IdentificationResult:
    """Geometric correction by genetic search, then a learned length
    correction for whatever structure remains in the residuals.

    The learned stage is dropped entirely if it cannot beat predicting zero
    on the training set, so the combined result is never worse than the
    search stage alone.
    """
    svm_cfg = svm_cfg or SVMConfig()
    ga_res = ga_identify(dataset, model, nominal, ga_cfg)
    joints, _ = train_arrays(dataset)
    corrected = kin.apply_errors(nominal, ga_res.x_hat)
    targets = ms.residuals(model, corrected, dataset)
    predictor = svm_fit(joints, targets, svm_cfg)
    stage_rmse = rmse(targets - predictor(joints))
    keep_predictor = stage_rmse <= rmse(targets)
    history = ga_res.history + (predictor.history[1:] if keep_predictor else ())
    return IdentificationResult(
        method="sga",
        x_hat=ga_res.x_hat,
        residual_predictor=predictor if keep_predictor else None,
        history=history,
        iterations=ga_res.iterations + svm_cfg.epochs,
        config=SGAConfig(ga=ga_res.config, svm=svm_cfg),
        diagnostics={
            "svm_stage_kept": keep_predictor,
            "ga_train_rmse": ga_res.history[-1],
            "svm_train_rmse": stage_rmse,
        },
    )

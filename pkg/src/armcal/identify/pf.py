"""Particle filter over the parameter error vector.

Particles are candidate 24-vectors.  Each iteration diffuses them, scores
every particle by how well its corrected chain reproduces the measured
residual vector (Gaussian likelihood with variance R per sample), normalizes
the weights, and resamples systematically when the effective sample size
drops below a configured fraction of the population.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kinematics as kin
from .. import measurement as ms
from ..errors import DegenerateWeightsError, InvalidArgumentError
from .base import (IdentificationResult, expand_groups,
                   predicted_residual_matrix, rmse, train_arrays)

_PRIOR_DEFAULT = (3.0, 3.0, 0.015, 0.015)


@dataclass(frozen=True)
class PFConfig:
    n_particles: int = 600
    prior_center: object = 0.0
    prior_sigma: object = _PRIOR_DEFAULT
    U_sigma: object = (0.3, 0.3, 0.0015, 0.0015)
    decay: float = 0.95
    R: float = 0.5
    iterations: int = 80
    resample_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 1:
            raise InvalidArgumentError("n_particles must be >= 1")
        if self.iterations < 1:
            raise InvalidArgumentError("iterations must be >= 1")
        if not (np.isfinite(self.R) and self.R > 0):
            raise InvalidArgumentError("R must be finite and > 0")
        if not 0.0 <= self.resample_threshold <= 1.0:
            raise InvalidArgumentError("resample_threshold must lie in [0, 1]")
        if not 0.0 < self.decay <= 1.0:
            raise InvalidArgumentError("decay must lie in (0, 1]")
        center = np.asarray(self.prior_center, dtype=float)
        if center.ndim == 0:
            center = np.full(kin.N_PARAMS, float(center))
        if center.shape != (kin.N_PARAMS,) or not np.all(np.isfinite(center)):
            raise InvalidArgumentError("prior_center must be scalar or 24 finite values")
        object.__setattr__(self, "prior_center", center)
        for name in ("prior_sigma", "U_sigma"):
            sig = expand_groups(getattr(self, name), name)
            if np.any(sig < 0):
                raise InvalidArgumentError(f"{name} must be >= 0")
            object.__setattr__(self, name, sig)


def normalized_weights(log_weights):
    """Shift-and-exponentiate log weights so they sum to 1."""
    lw = np.asarray(log_weights, dtype=float)
    finite = np.isfinite(lw)
    if not finite.any():
        raise DegenerateWeightsError(
            "all particle weights vanished; try a larger weighting variance R"
        )
    lw = np.where(finite, lw, -np.inf)
    w = np.exp(lw - lw[finite].max())
    return w / w.sum()


def systematic_resample(weights, rng):
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions).clip(max=n - 1)


def pf_identify(dataset: ms.Dataset, model: ms.CableEncoderModel,
                nominal: kin.DHChain, cfg: PFConfig | None = None) -> IdentificationResult:
    cfg = cfg or PFConfig()
    rng = np.random.default_rng(cfg.seed)
    joints, lengths = train_arrays(dataset)
    nominal_arr = nominal.as_array()
    measured_residual = lengths - ms.cable_lengths(model, nominal_arr, joints)

    X = cfg.prior_center + rng.standard_normal((cfg.n_particles, kin.N_PARAMS)) * cfg.prior_sigma
    history = [rmse(measured_residual)]
    weight_sums = []
    estimate = cfg.prior_center.copy()
    for k in range(cfg.iterations):
        step = cfg.U_sigma * cfg.decay**k
        X = X + rng.standard_normal(X.shape) * step
        predicted = predicted_residual_matrix(model, nominal_arr, X, joints)
        log_w = -0.5 * np.sum((measured_residual - predicted) ** 2, axis=1) / cfg.R
        w = normalized_weights(log_w)
        weight_sums.append(float(w.sum()))
        estimate = w @ X
        est_params = nominal_arr + kin.flat_to_table(estimate)
        history.append(rmse(lengths - ms.cable_lengths(model, est_params, joints)))
        ess = 1.0 / np.sum(w * w)
        if ess < cfg.resample_threshold * cfg.n_particles:
            X = X[systematic_resample(w, rng)]
    return IdentificationResult(
        method="pf",
        x_hat=kin.KinematicErrorVector.from_flat(estimate),
        residual_predictor=None,
        history=tuple(history),
        iterations=cfg.iterations,
        config=cfg,
        diagnostics={"weight_sums": tuple(weight_sums)},
    )

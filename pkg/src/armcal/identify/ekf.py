"""Extended Kalman filter over the 24 kinematic parameters.

The state is the parameter error vector; the process model is identity with
additive noise Q, and each sample contributes one scalar length measurement
linearized through the cable-length Jacobian row at the current estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kinematics as kin
from .. import measurement as ms
from ..errors import InvalidArgumentError, NumericalFailureError
from .base import IdentificationResult, covariance_matrix, rmse, train_arrays

# generous position prior (mm^2) and angle prior (rad^2); tight process noise
_P0_DEFAULT = (4.0, 4.0, 1e-4, 1e-4)
_Q_DEFAULT = (1e-8, 1e-8, 2.5e-13, 2.5e-13)


@dataclass(frozen=True)
class EKFConfig:
    P0: object = _P0_DEFAULT
    Q: object = _Q_DEFAULT
    R: float = 0.01
    passes: int = 3

    def __post_init__(self):
        object.__setattr__(self, "P0", covariance_matrix(self.P0, "P0"))
        object.__setattr__(self, "Q", covariance_matrix(self.Q, "Q"))
        if not (np.isfinite(self.R) and self.R > 0):
            raise InvalidArgumentError("R must be finite and > 0")
        object.__setattr__(self, "R", float(self.R))
        if self.passes < 1:
            raise InvalidArgumentError("passes must be >= 1")


def scalar_update(x, P, jrow, innovation, R):
    """One Kalman update for a scalar measurement; works batched.

    x: (..., n), P: (..., n, n), jrow: (..., n), innovation: (...,) scalars.
    Returns (x, P, S) with P symmetrized.
    """
    Pj = np.einsum("...ij,...j->...i", P, jrow)
    S = np.einsum("...i,...i->...", jrow, Pj) + R
    K = Pj / S[..., None]
    x = x + K * np.asarray(innovation)[..., None]
    P = P - K[..., :, None] * Pj[..., None, :]
    P = 0.5 * (P + np.swapaxes(P, -1, -2))
    return x, P, S


def ekf_identify(dataset: ms.Dataset, model: ms.CableEncoderModel,
                 nominal: kin.DHChain, cfg: EKFConfig | None = None) -> IdentificationResult:
    """Sequential EKF sweeps over the training samples.

    Each sample: covariance prediction P += Q, then a scalar measurement
    update with innovation (measured - predicted length) linearized at the
    current corrected chain.  Raises when the innovation variance is not a
    positive finite number, naming the offending sample.
    """
    cfg = cfg or EKFConfig()
    joints, lengths = train_arrays(dataset)
    nominal_arr = nominal.as_array()
    x = np.zeros(kin.N_PARAMS)
    P = cfg.P0.copy()
    min_eig = np.inf
    max_asym = 0.0
    history = [rmse(lengths - ms.cable_lengths(model, nominal_arr, joints))]
    for _ in range(cfg.passes):
        for i in range(len(lengths)):
            P = P + cfg.Q
            params = nominal_arr + kin.flat_to_table(x)
            predicted = ms.cable_lengths(model, params, joints[i])
            jrow = ms.length_jacobian(model, params, joints[i])
            innovation = lengths[i] - predicted
            S = float(jrow @ P @ jrow + cfg.R)
            if not (np.isfinite(S) and S > 0):
                raise NumericalFailureError(
                    f"innovation covariance not positive at sample {i} (S={S})"
                )
            x, P, _ = scalar_update(x, P, jrow, innovation, cfg.R)
            min_eig = min(min_eig, float(np.linalg.eigvalsh(P).min()))
            max_asym = max(max_asym, float(np.abs(P - P.T).max()))
        params = nominal_arr + kin.flat_to_table(x)
        history.append(rmse(lengths - ms.cable_lengths(model, params, joints)))
    return IdentificationResult(
        method="ekf",
        x_hat=kin.KinematicErrorVector.from_flat(x),
        residual_predictor=None,
        history=tuple(history),
        iterations=cfg.passes,
        config=cfg,
        diagnostics={"min_covariance_eigenvalue": min_eig,
                     "max_covariance_asymmetry": max_asym},
    )

"""Damped least-squares identification of the parameter error vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kinematics as kin
from .. import measurement as ms
from ..errors import InvalidArgumentError, RankDeficiencyError
from .base import IdentificationResult, rmse, train_arrays


@dataclass(frozen=True)
class LMConfig:
    damping: float = 0.01
    iterations: int = 20

    def __post_init__(self):
        if not (np.isfinite(self.damping) and self.damping >= 0):
            raise InvalidArgumentError("damping must be finite and >= 0")
        if self.iterations < 1:
            raise InvalidArgumentError("iterations must be >= 1")


def lm_step(J, E, damping):
    """Solve (J'J + damping*I) delta = J'E for one increment.

    With zero damping this is the ordinary least-squares (pseudo-inverse)
    solution; a rank-deficient J then raises instead of silently picking a
    direction in the null space.
    """
    n = J.shape[1]
    if damping == 0.0:
        if np.linalg.matrix_rank(J) < n:
            raise RankDeficiencyError(
                "normal equations are singular; set damping > 0"
            )
        delta, *_ = np.linalg.lstsq(J, E, rcond=None)
        return delta
    A = J.T @ J + damping * np.eye(n)
    return np.linalg.solve(A, J.T @ E)


def lm_identify(dataset: ms.Dataset, model: ms.CableEncoderModel,
                nominal: kin.DHChain, damping: float = 0.01,
                iterations: int = 20, *, x0=None, active=None,
                step_tol: float = 1e-10) -> IdentificationResult:
    """Iterated damped least squares on the stacked length residuals.

    ``active`` optionally restricts the update to a subset of the 24 flat
    parameter indices (the rest stay at their ``x0`` values); useful when a
    direction is known to be unobservable.
    """
    LMConfig(damping, iterations)  # validate
    joints, lengths = train_arrays(dataset)
    nominal_arr = nominal.as_array()
    x = np.zeros(kin.N_PARAMS) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.shape != (kin.N_PARAMS,):
        raise InvalidArgumentError("x0 must have 24 entries")
    idx = np.arange(kin.N_PARAMS) if active is None else np.asarray(active, dtype=int)

    params = nominal_arr + kin.flat_to_table(x)
    E = lengths - ms.cable_lengths(model, params, joints)
    history = [rmse(E)]
    done = 0
    for _ in range(iterations):
        J = ms.length_jacobian(model, params, joints)[:, idx]
        delta = lm_step(J, E, damping)
        x[idx] += delta
        params = nominal_arr + kin.flat_to_table(x)
        E = lengths - ms.cable_lengths(model, params, joints)
        history.append(rmse(E))
        done += 1
        if np.linalg.norm(delta) < step_tol:
            break
    return IdentificationResult(
        method="lm",
        x_hat=kin.KinematicErrorVector.from_flat(x),
        residual_predictor=None,
        history=tuple(history),
        iterations=done,
        config=LMConfig(damping, iterations),
    )

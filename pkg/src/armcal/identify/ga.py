"""Real-coded genetic search over the 24-dimensional error vector.

Fitness is the mean squared training residual of the corrected chain.
Selection is tournament-of-3, recombination a per-gene blend, mutation
additive Gaussian, and the top individuals are carried over unchanged, so
the best fitness never regresses between generations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kinematics as kin
from .. import measurement as ms
from ..errors import InvalidArgumentError
from .base import (IdentificationResult, expand_groups,
                   predicted_residual_matrix, rmse, train_arrays)

_BOUNDS_DEFAULT = (3.0, 3.0, 0.015, 0.015)
_MUT_SIGMA_DEFAULT = (0.15, 0.15, 0.00075, 0.00075)
_BLEND_ALPHA = 0.5


@dataclass(frozen=True)
class GAConfig:
    population: int = 100
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float = 0.15
    mutation_sigma: object = _MUT_SIGMA_DEFAULT
    search_bounds: object = _BOUNDS_DEFAULT
    elitism: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise InvalidArgumentError("population must be >= 2")
        if self.generations < 0:
            raise InvalidArgumentError("generations must be >= 0")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1]")
        if not 1 <= self.elitism < self.population:
            raise InvalidArgumentError("elitism must lie in [1, population)")
        sig = expand_groups(self.mutation_sigma, "mutation_sigma")
        if np.any(sig < 0):
            raise InvalidArgumentError("mutation_sigma must be >= 0")
        object.__setattr__(self, "mutation_sigma", sig)
        bounds = expand_groups(self.search_bounds, "search_bounds")
        if np.any(bounds <= 0):
            raise InvalidArgumentError("search_bounds must be > 0")
        object.__setattr__(self, "search_bounds", bounds)


def _tournament(fitness, rng, n_picks):
    entrants = rng.integers(0, len(fitness), size=(n_picks, 3))
    return entrants[np.arange(n_picks), np.argmin(fitness[entrants], axis=1)]


def ga_identify(dataset: ms.Dataset, model: ms.CableEncoderModel,
                nominal: kin.DHChain, cfg: GAConfig | None = None,
                *, initial_population=None) -> IdentificationResult:
    """Evolve candidate error vectors inside the search box.

    With generations = 0 no search happens and the prior mean (the zero
    vector) is returned.  The zero vector is also always injected into the
    initial population, so the final answer can never score worse than the
    uncalibrated chain.
    """
    cfg = cfg or GAConfig()
    joints, lengths = train_arrays(dataset)
    nominal_arr = nominal.as_array()
    measured_residual = lengths - ms.cable_lengths(model, nominal_arr, joints)
    pre_rmse = rmse(measured_residual)
    if cfg.generations == 0:
        return IdentificationResult(
            method="ga", x_hat=kin.KinematicErrorVector.zeros(),
            residual_predictor=None, history=(pre_rmse,), iterations=0, config=cfg,
        )

    rng = np.random.default_rng(cfg.seed)
    bounds = cfg.search_bounds
    pop = rng.uniform(-bounds, bounds, size=(cfg.population, kin.N_PARAMS))
    pop[0] = 0.0
    if initial_population is not None:
        seeded = np.atleast_2d(np.asarray(initial_population, dtype=float))
        pop[1:1 + len(seeded)] = np.clip(seeded, -bounds, bounds)

    def evaluate(population):
        predicted = predicted_residual_matrix(model, nominal_arr, population, joints)
        return np.mean((measured_residual - predicted) ** 2, axis=1)

    fitness = evaluate(pop)
    history = [pre_rmse]
    for _ in range(cfg.generations):
        order = np.argsort(fitness)
        n_children = cfg.population - cfg.elitism
        p1 = pop[_tournament(fitness, rng, n_children)]
        p2 = pop[_tournament(fitness, rng, n_children)]
        u = rng.uniform(-_BLEND_ALPHA, 1.0 + _BLEND_ALPHA, size=p1.shape)
        children = np.where(
            rng.random((n_children, 1)) < cfg.crossover_rate,
            u * p1 + (1.0 - u) * p2,
            p1,
        )
        mutate = rng.random(children.shape) < cfg.mutation_rate
        children = children + mutate * rng.standard_normal(children.shape) * cfg.mutation_sigma
        children = np.clip(children, -bounds, bounds)
        pop = np.vstack([pop[order[: cfg.elitism]], children])
        fitness = np.concatenate([fitness[order[: cfg.elitism]], evaluate(children)])
        history.append(float(np.sqrt(fitness.min())))
    best = pop[np.argmin(fitness)]
    return IdentificationResult(
        method="ga",
        x_hat=kin.KinematicErrorVector.from_flat(best),
        residual_predictor=None,
        history=tuple(history),
        iterations=cfg.generations,
        config=cfg,
    )

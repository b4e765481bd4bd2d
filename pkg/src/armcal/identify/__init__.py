"""Identification algorithms: estimate the 24 kinematic parameter errors
(and, for the learning-based ones, a residual length correction) from a
training dataset of cable-length measurements.
"""

from __future__ import annotations

from ..errors import InvalidArgumentError
from .base import (IdentificationResult, corrected_residuals, load_result,
                   result_from_json, result_to_json, save_result)
from .ekf import EKFConfig, ekf_identify, scalar_update
from .ga import GAConfig, ga_identify
from .hybrids import (EPFConfig, LMGAConfig, SGAConfig, epf_identify,
                      lmga_identify, sga_identify)
from .lm import LMConfig, lm_identify, lm_step
from .pf import PFConfig, normalized_weights, pf_identify, systematic_resample
from .svm import SVMConfig, SVMPredictor, loss_and_grads, svm_fit, svm_identify

METHOD_NAMES = ("ekf", "lm", "pf", "svm", "ga", "epf", "lmga", "sga")

_CONFIG_TYPES = {
    "ekf": EKFConfig,
    "lm": LMConfig,
    "pf": PFConfig,
    "svm": SVMConfig,
    "ga": GAConfig,
    "epf": EPFConfig,
    "lmga": LMGAConfig,
    "sga": SGAConfig,
}


def default_config(name: str):
    """Fresh default configuration object for a method name."""
    if name not in _CONFIG_TYPES:
        raise InvalidArgumentError(
            f"unknown method {name!r}; valid methods: {', '.join(METHOD_NAMES)}"
        )
    return _CONFIG_TYPES[name]()


def reseeded(config, seed: int):
    """The same config with every nested seed field set to ``seed``.

    Configs without any random draw (EKF, LM) are returned unchanged.
    """
    from dataclasses import replace

    if hasattr(config, "seed"):
        return replace(config, seed=seed)
    if isinstance(config, EPFConfig):
        return replace(config, pf=replace(config.pf, seed=seed))
    if isinstance(config, LMGAConfig):
        return replace(config, ga=replace(config.ga, seed=seed))
    if isinstance(config, SGAConfig):
        return replace(config, ga=replace(config.ga, seed=seed),
                       svm=replace(config.svm, seed=seed))
    return config


def fit_method(name: str, dataset, model, nominal, config=None) -> IdentificationResult:
    """Run one named identifier on a training dataset."""
    if name not in _CONFIG_TYPES:
        raise InvalidArgumentError(
            f"unknown method {name!r}; valid methods: {', '.join(METHOD_NAMES)}"
        )
    cfg = config if config is not None else default_config(name)
    if name == "ekf":
        return ekf_identify(dataset, model, nominal, cfg)
    if name == "lm":
        return lm_identify(dataset, model, nominal, cfg.damping, cfg.iterations)
    if name == "pf":
        return pf_identify(dataset, model, nominal, cfg)
    if name == "svm":
        return svm_identify(dataset, model, nominal, cfg)
    if name == "ga":
        return ga_identify(dataset, model, nominal, cfg)
    if name == "epf":
        return epf_identify(dataset, model, nominal, cfg.pf, cfg.ekf)
    if name == "lmga":
        return lmga_identify(dataset, model, nominal, cfg.ga,
                             cfg.lm.damping, cfg.lm.iterations)
    return sga_identify(dataset, model, nominal, cfg.ga, cfg.svm)


__all__ = [
    "IdentificationResult", "corrected_residuals", "fit_method",
    "default_config", "reseeded", "METHOD_NAMES",
    "result_to_json", "result_from_json", "save_result", "load_result",
    "EKFConfig", "ekf_identify", "scalar_update",
    "LMConfig", "lm_identify", "lm_step",
    "PFConfig", "pf_identify", "normalized_weights", "systematic_resample",
    "SVMConfig", "SVMPredictor", "svm_fit", "svm_identify", "loss_and_grads",
    "GAConfig", "ga_identify",
    "EPFConfig", "epf_identify",
    "LMGAConfig", "lmga_identify",
    "SGAConfig", "sga_identify",
]

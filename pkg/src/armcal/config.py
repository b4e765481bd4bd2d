"""Plain-text (INI) run configuration for the command-line tools.

One file can pin everything a run needs — robot geometry, encoder placement,
per-algorithm settings, ensemble layout, simulation and split parameters —
so that re-running a command with the same file and seeds reproduces its
artifacts byte for byte.  Command-line flags override file values.

Every random draw in the toolkit flows from a seed named here or on the
command line; nothing is ever seeded from the clock.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, replace

from . import identify
from . import kinematics as kin
from . import measurement as ms
from .errors import InvalidArgumentError, ParseError

CONFIG_ENV_VAR = "ARMCAL_CONFIG"


def _parse_float(raw):
    return float(raw)


def _parse_int(raw):
    return int(raw)


def _parse_str(raw):
    return raw.strip()


def _parse_floats(raw):
    """A single float, or a comma-separated tuple of floats."""
    parts = [p for p in (s.strip() for s in raw.split(",")) if p]
    if len(parts) == 1:
        return float(parts[0])
    return tuple(float(p) for p in parts)


def _parse_names(raw):
    return tuple(p for p in (s.strip() for s in raw.split(",")) if p)


_METHOD_KEYS = {
    "ekf": {"p0": ("P0", _parse_floats), "q": ("Q", _parse_floats),
            "r": ("R", _parse_float), "passes": ("passes", _parse_int)},
    "lm": {"damping": ("damping", _parse_float),
           "iterations": ("iterations", _parse_int)},
    "pf": {"n_particles": ("n_particles", _parse_int),
           "prior_center": ("prior_center", _parse_floats),
           "prior_sigma": ("prior_sigma", _parse_floats),
           "u_sigma": ("U_sigma", _parse_floats),
           "decay": ("decay", _parse_float),
           "r": ("R", _parse_float),
           "iterations": ("iterations", _parse_int),
           "resample_threshold": ("resample_threshold", _parse_float),
           "seed": ("seed", _parse_int)},
    "svm": {"hidden_width": ("hidden_width", _parse_int),
            "lambda1": ("lambda1", _parse_float),
            "learning_rate": ("learning_rate", _parse_float),
            "epochs": ("epochs", _parse_int),
            "init": ("init", _parse_str),
            "seed": ("seed", _parse_int)},
    "ga": {"population": ("population", _parse_int),
           "generations": ("generations", _parse_int),
           "crossover_rate": ("crossover_rate", _parse_float),
           "mutation_rate": ("mutation_rate", _parse_float),
           "mutation_sigma": ("mutation_sigma", _parse_floats),
           "search_bounds": ("search_bounds", _parse_floats),
           "elitism": ("elitism", _parse_int),
           "seed": ("seed", _parse_int)},
}

# hybrid sections hold dotted keys into their part configs, e.g. "pf.decay"
_HYBRID_PARTS = {
    "epf": ("pf", "ekf"),
    "lmga": ("ga", "lm"),
    "sga": ("ga", "svm"),
}

_SCALAR_SECTIONS = {
    "robot": {"params": _parse_str},
    "encoder": {"anchor": _parse_floats, "length_offset": _parse_float},
    "simulate": {"n": _parse_int, "sigma": _parse_float, "seed": _parse_int,
                 "joint_range": _parse_float, "error_linear": _parse_float,
                 "error_angular": _parse_float},
    "split": {"train_fraction": _parse_float, "seed": _parse_int},
    "ensemble": {"order": _parse_names, "shrinkage": _parse_float,
                 "seed": _parse_int},
}

_SIMULATE_DEFAULTS = {
    "n": 120,
    "sigma": 0.1,
    "seed": 0,
    "joint_range": ms.DEFAULT_JOINT_RANGE,
    "error_linear": 1.0,
    "error_angular": 0.005,
}

_SPLIT_DEFAULTS = {"train_fraction": 0.8, "seed": 0}


def _parse_section(section, raw_items, keymap, path):
    out = {}
    for key, raw in raw_items:
        if key not in keymap:
            raise ParseError(
                f"{path}: unknown option {key!r} in section [{section}]")
        try:
            out[key] = keymap[key](raw)
        except ValueError:
            raise ParseError(
                f"{path}: bad value {raw!r} for {key!r} in [{section}]") from None
    return out


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: raw section values plus typed accessors."""

    path: str | None
    sections: dict

    def robot_chain(self) -> kin.DHChain:
        params = self.sections.get("robot", {}).get("params")
        if params is None:
            return kin.default_chain()
        return kin.load_chain(params)

    def encoder_model(self) -> ms.CableEncoderModel:
        enc = self.sections.get("encoder", {})
        default = ms.default_encoder()
        anchor = enc.get("anchor", tuple(default.anchor))
        offset = enc.get("length_offset", default.length_offset)
        return ms.CableEncoderModel(anchor=anchor, length_offset=offset)

    def method_config(self, name: str):
        """Config object for a base method, file values over defaults."""
        if name in _HYBRID_PARTS:
            cfg = identify.default_config(name)
            raw = self.sections.get(name, {})
            for part in _HYBRID_PARTS[name]:
                prefix = part + "."
                picked = {k[len(prefix):]: v for k, v in raw.items()
                          if k.startswith(prefix)}
                if picked:
                    keymap = _METHOD_KEYS[part]
                    kwargs = {keymap[k][0]: keymap[k][1](v)
                              for k, v in picked.items()}
                    cfg = replace(cfg, **{part: replace(getattr(cfg, part),
                                                        **kwargs)})
            return cfg
        if name not in _METHOD_KEYS:
            raise InvalidArgumentError(
                f"unknown method {name!r}; valid methods: "
                f"{', '.join(identify.METHOD_NAMES)}")
        keymap = _METHOD_KEYS[name]
        raw = self.sections.get(name, {})
        kwargs = {keymap[k][0]: keymap[k][1](v) for k, v in raw.items()}
        return replace(identify.default_config(name), **kwargs)

    def ensemble_settings(self) -> dict:
        """Keyword arguments for boost_fit."""
        raw = self.sections.get("ensemble", {})
        out = {}
        if "order" in raw:
            for n in raw["order"]:
                if n not in identify.METHOD_NAMES:
                    raise InvalidArgumentError(
                        f"unknown method {n!r} in ensemble order; valid "
                        f"methods: {', '.join(identify.METHOD_NAMES)}")
            out["base_order"] = raw["order"]
        out["shrinkage"] = raw.get("shrinkage", 1.0)
        out["seed"] = raw.get("seed", 0)
        return out

    def simulate_settings(self) -> dict:
        out = dict(_SIMULATE_DEFAULTS)
        out.update(self.sections.get("simulate", {}))
        return out

    def split_settings(self) -> dict:
        out = dict(_SPLIT_DEFAULTS)
        out.update(self.sections.get("split", {}))
        return out


def load_config(path=None) -> RunConfig:
    """Read an INI file into a RunConfig.

    With no path, falls back to the file named by $ARMCAL_CONFIG, and then
    to built-in defaults.  Unknown sections or options, malformed values,
    and referenced files that do not exist are all reported as ParseError
    with the config path (and, for INI syntax errors, the line).
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    if path is None:
        return RunConfig(path=None, sections={})

    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ParseError(f"bad config {path}: {exc}") from None

    sections = {}
    for section in parser.sections():
        items = parser.items(section)
        if section in _SCALAR_SECTIONS:
            sections[section] = _parse_section(
                section, items, _SCALAR_SECTIONS[section], path)
        elif section in _METHOD_KEYS:
            # validate now; typed construction happens in method_config
            keymap = _METHOD_KEYS[section]
            for key, raw in items:
                if key not in keymap:
                    raise ParseError(
                        f"{path}: unknown option {key!r} in section [{section}]")
                try:
                    keymap[key][1](raw)
                except ValueError:
                    raise ParseError(f"{path}: bad value {raw!r} for {key!r} "
                                     f"in [{section}]") from None
            sections[section] = dict(items)
        elif section in _HYBRID_PARTS:
            for key, raw in items:
                part, _, rest = key.partition(".")
                if part not in _HYBRID_PARTS[section] or \
                        rest not in _METHOD_KEYS[part]:
                    raise ParseError(
                        f"{path}: unknown option {key!r} in section [{section}]")
                try:
                    _METHOD_KEYS[part][rest][1](raw)
                except ValueError:
                    raise ParseError(f"{path}: bad value {raw!r} for {key!r} "
                                     f"in [{section}]") from None
            sections[section] = dict(items)
        else:
            raise ParseError(f"{path}: unknown section [{section}]")

    cfg = RunConfig(path=str(path), sections=sections)
    robot = sections.get("robot", {}).get("params")
    if robot is not None and not os.path.exists(robot):
        raise ParseError(f"{path}: robot parameter file {robot!r} does not exist")
    return cfg

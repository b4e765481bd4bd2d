"""Command-line front end: simulate, calibrate, evaluate, compare, curve.

Every command reads an optional INI config (``--config`` flag, else the
file named by $ARMCAL_CONFIG) and applies command-line flags on top, flags
winning.  All artifacts are deterministic for fixed seeds: rerunning a
command with the same inputs reproduces its output files byte for byte.

Exit status: 0 when every requested artifact was written, 2 for bad usage
(unknown method, unreadable config or input file), 1 for a calibration
that failed numerically.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import config as cfgmod
from . import ensemble as ens
from . import evaluate as ev
from . import identify
from . import kinematics as kin
from . import measurement as ms
from .errors import (CalibrationError, InvalidArgumentError, ParseError)

_ALL_METHODS = identify.METHOD_NAMES + ("ensemble",)


def _load_context(args):
    """(RunConfig, nominal chain, encoder model) shared by every command."""
    cfg = cfgmod.load_config(getattr(args, "config", None))
    if getattr(args, "robot", None):
        chain = kin.load_chain(args.robot)
    else:
        chain = cfg.robot_chain()
    return cfg, chain, cfg.encoder_model()


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _json_block(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# --- simulate ---

def _cmd_simulate(args):
    cfg, chain, model = _load_context(args)
    s = cfg.simulate_settings()
    for key in ("n", "sigma", "seed", "joint_range", "error_linear",
                "error_angular"):
        val = getattr(args, key)
        if val is not None:
            s[key] = val

    if args.zero_error:
        true_x = kin.KinematicErrorVector.zeros()
    else:
        rng = np.random.default_rng(s["seed"])
        flat = np.concatenate([
            rng.uniform(-s["error_linear"], s["error_linear"], 12),
            rng.uniform(-s["error_angular"], s["error_angular"], 12),
        ])
        # the last twist deviation is invisible to an end-point length
        # measurement, so synthetic truths keep it at zero
        flat[23] = 0.0
        true_x = kin.KinematicErrorVector.from_flat(flat)

    dataset = ms.simulate_dataset(model, chain, true_x, n=s["n"],
                                  noise_sigma=s["sigma"], seed=s["seed"],
                                  joint_range=s["joint_range"])
    ms.save_dataset(args.output, dataset)
    if args.truth_output:
        _write_text(args.truth_output,
                    _json_block({"true_x": [float(v) for v in true_x.flatten()]}))
    print(f"wrote {len(dataset)} samples to {args.output}")
    return 0


# --- calibrate ---

def _cmd_calibrate(args):
    if args.method not in _ALL_METHODS:
        print(f"error: unknown method {args.method!r}; valid methods: "
              f"{', '.join(_ALL_METHODS)}", file=sys.stderr)
        return 2
    cfg, chain, model = _load_context(args)
    train = ms.load_dataset(args.data)

    if args.method == "ensemble":
        kwargs = cfg.ensemble_settings()
        if args.shrinkage is not None:
            kwargs["shrinkage"] = args.shrinkage
        if args.seed is not None:
            kwargs["seed"] = args.seed
        fitted = ens.boost_fit(train, model, chain, **kwargs)
        ens.save_ensemble(args.output, fitted)
        final = fitted.train_rmse_history[-1]
    else:
        method_cfg = cfg.method_config(args.method)
        if args.seed is not None:
            method_cfg = identify.reseeded(method_cfg, args.seed)
        result = identify.fit_method(args.method, train, model, chain,
                                     config=method_cfg)
        identify.save_result(args.output, result)
        final = result.history[-1]
    print(f"{args.method}: final training RMSE {final!r} mm -> {args.output}")
    return 0


# --- evaluate ---

def _cmd_evaluate(args):
    cfg, chain, model = _load_context(args)
    dataset = ms.load_dataset(args.data)
    try:
        with open(args.model, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read model {args.model}: {exc}") from None
    try:
        kind = json.loads(text).get("format")
    except (json.JSONDecodeError, AttributeError):
        raise ParseError(f"{args.model}: not a result or ensemble JSON "
                         f"document") from None
    if kind == ens.FORMAT_NAME:
        fitted = ens.ensemble_from_json(text)
        residuals = ens.ensemble_residuals(fitted, dataset)
    else:
        result = identify.result_from_json(text)
        residuals = identify.corrected_residuals(result, model, chain, dataset)
    m = ev.compute_metrics(residuals)
    out = _json_block({"n": len(dataset), "rmse": m.rmse, "std": m.std,
                       "max": m.max})
    if args.output:
        _write_text(args.output, out)
    else:
        sys.stdout.write(out)
    return 0


# --- compare / curve plumbing ---

def _load_split(args, cfg):
    if args.train and args.test:
        return ms.load_dataset(args.train), ms.load_dataset(args.test)
    if args.data:
        s = cfg.split_settings()
        if args.train_fraction is not None:
            s["train_fraction"] = args.train_fraction
        if args.split_seed is not None:
            s["seed"] = args.split_seed
        full = ms.load_dataset(args.data)
        return ev.split_dataset(full, s["train_fraction"], s["seed"])
    raise InvalidArgumentError("need either --data or both --train and --test")


def _cmd_compare(args):
    methods = tuple(m for m in (s.strip() for s in args.methods.split(","))
                    if m)
    for m in methods:
        if m not in _ALL_METHODS:
            print(f"error: unknown method {m!r}; valid methods: "
                  f"{', '.join(_ALL_METHODS)}", file=sys.stderr)
            return 2
    cfg, chain, model = _load_context(args)
    train, test = _load_split(args, cfg)
    configs = {m: cfg.method_config(m) for m in methods if m != "ensemble"}
    if "ensemble" in methods:
        configs["ensemble"] = cfg.ensemble_settings()
    report = ev.compare_table(methods, train, test, model, chain,
                              configs=configs, descriptor=args.descriptor)
    print(ev.report_to_text(report))
    if args.output:
        _write_text(args.output, ev.report_to_json(report) + "\n")
    if args.series_output:
        _write_text(args.series_output, ev.error_series_csv(report))
    return 0


def _cmd_curve(args):
    cfg, chain, model = _load_context(args)
    train, test = _load_split(args, cfg)
    kwargs = cfg.ensemble_settings()
    if args.shrinkage is not None:
        kwargs["shrinkage"] = args.shrinkage
    if args.seed is not None:
        kwargs["seed"] = args.seed
    fitted = ens.boost_fit(train, model, chain, **kwargs)
    lines = ["stage,method,train_rmse,test_rmse,test_std,test_max"]
    for k in range(1, len(fitted.stages) + 1):
        m = ev.compute_metrics(ens.ensemble_residuals(fitted.truncated(k), test))
        lines.append(",".join([
            str(k), fitted.base_order[k - 1],
            repr(float(fitted.train_rmse_history[k])),
            repr(m.rmse), repr(m.std), repr(m.max),
        ]))
    out = "\n".join(lines) + "\n"
    if args.output:
        _write_text(args.output, out)
    else:
        sys.stdout.write(out)
    return 0


# --- parser ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armcal",
        description="Cable-encoder calibration toolkit for 6-joint arms: "
                    "simulate datasets, fit kinematic error models, and "
                    "report accuracy.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file (default: "
                       f"${cfgmod.CONFIG_ENV_VAR} if set)")
        p.add_argument("--robot", help="robot parameter file overriding "
                       "the config / built-in geometry")

    p = sub.add_parser("simulate", help="emit a synthetic measurement CSV")
    common(p)
    p.add_argument("--n", type=int, help="number of samples (default 120)")
    p.add_argument("--sigma", type=float,
                   help="measurement noise, mm (default 0.1)")
    p.add_argument("--seed", type=int,
                   help="seed for truth, joints, and noise (default 0)")
    p.add_argument("--joint-range", dest="joint_range", type=float,
                   help="joint sampling half-range, rad (default 2*pi/3)")
    p.add_argument("--error-linear", dest="error_linear", type=float,
                   help="bound on injected |da|,|dd|, mm (default 1.0)")
    p.add_argument("--error-angular", dest="error_angular", type=float,
                   help="bound on injected |dtheta|,|dalpha|, rad "
                        "(default 0.005)")
    p.add_argument("--zero-error", action="store_true",
                   help="simulate the nominal geometry instead of a "
                        "perturbed one")
    p.add_argument("--truth-output", dest="truth_output",
                   help="also write the injected error vector as JSON")
    p.add_argument("--output", required=True, help="dataset CSV path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="fit one method (or the ensemble) "
                                         "to a dataset")
    common(p)
    p.add_argument("--method", required=True,
                   help="one of: " + ", ".join(_ALL_METHODS))
    p.add_argument("--data", required=True, help="training dataset CSV")
    p.add_argument("--seed", type=int, help="override the method's seed")
    p.add_argument("--shrinkage", type=float,
                   help="ensemble stage shrinkage in (0, 1]")
    p.add_argument("--output", required=True, help="fitted model JSON path")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("evaluate", help="score a fitted model on a dataset")
    common(p)
    p.add_argument("--model", required=True, help="fitted model JSON "
                   "(single method or ensemble)")
    p.add_argument("--data", required=True, help="dataset CSV to score on")
    p.add_argument("--output", help="metrics JSON path (default: stdout)")
    p.set_defaults(func=_cmd_evaluate)

    def split_flags(p):
        p.add_argument("--data", help="full dataset CSV to split")
        p.add_argument("--train-fraction", dest="train_fraction", type=float,
                       help="training share of --data (default 0.8)")
        p.add_argument("--split-seed", dest="split_seed", type=int,
                       help="seed for the --data split (default 0)")
        p.add_argument("--train", help="training dataset CSV (with --test)")
        p.add_argument("--test", help="test dataset CSV (with --train)")

    p = sub.add_parser("compare", help="fit several methods and print an "
                                       "accuracy table")
    common(p)
    split_flags(p)
    p.add_argument("--methods", default=",".join(_ALL_METHODS),
                   help="comma-separated method names (default: all)")
    p.add_argument("--descriptor", default="",
                   help="free-text label stored in the report")
    p.add_argument("--output", help="report JSON path")
    p.add_argument("--series-output", dest="series_output",
                   help="per-sample test residual CSV path (plot-ready)")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("curve", help="per-stage accuracy of the boosting "
                                     "ensemble")
    common(p)
    split_flags(p)
    p.add_argument("--shrinkage", type=float,
                   help="stage shrinkage in (0, 1]")
    p.add_argument("--seed", type=int, help="ensemble stage seed")
    p.add_argument("--output", help="curve CSV path (default: stdout)")
    p.set_defaults(func=_cmd_curve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Accuracy metrics, train/test splitting, and method comparison reports.

Residual vectors are summarized by three numbers, all in mm:

* ``rmse`` — root of the mean squared residual,
* ``std``  — mean absolute residual (kept under this name because the
  surrounding literature labels the quantity "Std" even though its formula
  is the mean of |e|; the formula wins),
* ``max``  — largest absolute residual.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import measurement as ms
from .errors import CalibrationError, InvalidArgumentError


@dataclass(frozen=True)
class MetricTriple:
    rmse: float
    std: float
    max: float

    def __post_init__(self):
        vals = (self.rmse, self.std, self.max)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise InvalidArgumentError(f"metrics must be finite and >= 0, got {vals}")
        slack = 1e-9 * max(1.0, self.max)
        if self.max + slack < self.rmse or self.max + slack < self.std:
            raise InvalidArgumentError("max must dominate rmse and std")

    def as_tuple(self):
        return (self.rmse, self.std, self.max)


def compute_metrics(residuals) -> MetricTriple:
    """Summarize a residual vector; rejects empty input."""
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size == 0:
        raise InvalidArgumentError("cannot compute metrics of an empty vector")
    absr = np.abs(r)
    return MetricTriple(
        rmse=float(np.sqrt(np.mean(r * r))),
        std=float(np.mean(absr)),
        max=float(np.max(absr)),
    )


def split_dataset(dataset: ms.Dataset, train_fraction: float = 0.8, seed: int = 0):
    """Seeded random partition into (train, test) datasets.

    The permuted first floor(train_fraction * n) samples form the training
    set; both halves must end up non-empty.
    """
    n = len(dataset)
    if n < 5:
        raise InvalidArgumentError("dataset too small to split (need >= 5 samples)")
    n_train = int(np.floor(train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise InvalidArgumentError(f"train_fraction {train_fraction} leaves an empty side")
    order = np.random.default_rng(seed).permutation(n)
    samples = dataset.samples
    train = ms.Dataset(tuple(samples[i] for i in order[:n_train]), seed=dataset.seed)
    test = ms.Dataset(tuple(samples[i] for i in order[n_train:]), seed=dataset.seed)
    return train, test


@dataclass(frozen=True)
class MethodRow:
    """One comparison line: metrics on both splits, or the failure message."""

    name: str
    test: MetricTriple | None
    train: MetricTriple | None
    failure: str | None = None


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[MethodRow, ...]
    descriptor: str
    seeds: dict
    error_series: dict  # method name -> per-sample test residuals (mm)

    def __post_init__(self):
        if not any(r.name == "Before" for r in self.rows):
            raise InvalidArgumentError("report must contain a Before row")

    def row(self, name: str) -> MethodRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise InvalidArgumentError(f"no row named {name!r}")


def compare_table(methods, train, test, model, nominal,
                  configs=None, descriptor="") -> ComparisonReport:
    """Fit each named method on train and score it on both splits.

    Besides the base identifier names, ``"ensemble"`` is accepted and runs
    the full boosting combination (its config entry, if any, is a dict of
    ``boost_fit`` keyword arguments).  A method that raises is recorded as
    failed and the rest continue.  The pre-calibration state appears as the
    mandatory "Before" row.
    """
    from . import ensemble as ens  # deferred: both pull in every algorithm
    from . import identify

    configs = configs or {}
    before_test = ms.residuals(model, nominal, test)
    before_train = ms.residuals(model, nominal, train)
    rows = [MethodRow("Before",
                      compute_metrics(before_test),
                      compute_metrics(before_train))]
    series = {"Before": before_test}
    seeds = {}
    for name in methods:
        cfg = configs.get(name)
        try:
            if name == "ensemble":
                fitted = ens.boost_fit(train, model, nominal, **(cfg or {}))
                r_test = ens.ensemble_residuals(fitted, test)
                r_train = ens.ensemble_residuals(fitted, train)
                seed = (cfg or {}).get("seed", 0)
            else:
                result = identify.fit_method(name, train, model, nominal, config=cfg)
                r_test = identify.corrected_residuals(result, model, nominal, test)
                r_train = identify.corrected_residuals(result, model, nominal, train)
                seed = getattr(result.config, "seed", None)
        except CalibrationError as exc:
            rows.append(MethodRow(name, None, None, failure=str(exc)))
            continue
        rows.append(MethodRow(name, compute_metrics(r_test), compute_metrics(r_train)))
        series[name] = r_test
        if seed is not None:
            seeds[name] = seed
    return ComparisonReport(tuple(rows), descriptor, seeds, series)


# --- report rendering ---

def _triple_dict(t: MetricTriple | None):
    return None if t is None else {"rmse": t.rmse, "std": t.std, "max": t.max}


def report_to_json(report: ComparisonReport) -> str:
    payload = {
        "descriptor": report.descriptor,
        "seeds": {k: int(v) for k, v in sorted(report.seeds.items())},
        "rows": [
            {
                "method": r.name,
                "test": _triple_dict(r.test),
                "train": _triple_dict(r.train),
                "failure": r.failure,
            }
            for r in report.rows
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def report_to_text(report: ComparisonReport, split: str = "test") -> str:
    """Aligned table of RMSE/Std/Max (mm) for one split."""
    if split not in ("test", "train"):
        raise InvalidArgumentError("split must be 'test' or 'train'")
    header = f"{'Method':<10} {'RMSE':>8} {'Std':>8} {'Max':>8}   [{split}, mm]"
    lines = [header, "-" * len(header)]
    for r in report.rows:
        t = r.test if split == "test" else r.train
        if t is None:
            lines.append(f"{r.name:<10} failed: {r.failure}")
        else:
            lines.append(f"{r.name:<10} {t.rmse:>8.4f} {t.std:>8.4f} {t.max:>8.4f}")
    return "\n".join(lines)


def error_series_csv(report: ComparisonReport) -> str:
    """Per-sample test residuals, one column per method, for plotting."""
    names = [r.name for r in report.rows if r.name in report.error_series]
    columns = [np.asarray(report.error_series[n], dtype=float) for n in names]
    lines = ["sample_index," + ",".join(names)]
    for i in range(len(columns[0])):
        lines.append(str(i) + "," + ",".join(repr(float(c[i])) for c in columns))
    return "\n".join(lines) + "\n"

"""Cable-encoder measurement model and synthetic dataset handling.

A single draw-wire encoder is anchored at a fixed point in the base frame;
its reading is the straight-line distance from the anchor to the arm's
end-effector plus a constant offset for the encoder's internal routing.
Comparing measured lengths against lengths predicted from nominal geometry
yields the residual vector that every identification routine consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kinematics as kin
from .errors import InvalidArgumentError, ParseError

DEFAULT_JOINT_RANGE = 2 * np.pi / 3


@dataclass(frozen=True)
class CableEncoderModel:
    """Fixed anchor point (mm, base frame) and constant length offset (mm)."""

    anchor: np.ndarray
    length_offset: float = 0.0

    def __post_init__(self):
        anchor = np.asarray(self.anchor, dtype=float)
        if anchor.shape != (3,) or not np.all(np.isfinite(anchor)):
            raise InvalidArgumentError("anchor must be a finite 3-vector")
        if not (np.isfinite(self.length_offset) and self.length_offset >= 0):
            raise InvalidArgumentError("length_offset must be finite and >= 0")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "length_offset", float(self.length_offset))


def default_encoder() -> CableEncoderModel:
    """Anchor placed off the base axis so first-joint errors stay visible."""
    return CableEncoderModel(anchor=np.array([250.0, -250.0, 100.0]))


@dataclass(frozen=True)
class Sample:
    joints: np.ndarray
    measured_length: float

    def __post_init__(self):
        object.__setattr__(self, "joints", kin.as_joints(self.joints))
        if not (np.isfinite(self.measured_length) and self.measured_length > 0):
            raise InvalidArgumentError("measured_length must be positive")
        object.__setattr__(self, "measured_length", float(self.measured_length))


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of (joints, measured length) pairs."""

    samples: tuple[Sample, ...]
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if len(self.samples) == 0:
            raise InvalidArgumentError("dataset must contain at least one sample")

    def __len__(self):
        return len(self.samples)

    def joints_matrix(self) -> np.ndarray:
        return np.array([s.joints for s in self.samples])

    def lengths(self) -> np.ndarray:
        return np.array([s.measured_length for s in self.samples])


# --- array-level helpers (broadcast over leading dimensions) ---

def cable_lengths(model: CableEncoderModel, params, thetas) -> np.ndarray:
    """Predicted encoder readings for parameter table(s) and joint batch(es)."""
    pos = kin.ee_positions(params, thetas)
    return np.linalg.norm(pos - model.anchor, axis=-1) + model.length_offset


def length_jacobian(model: CableEncoderModel, params, thetas) -> np.ndarray:
    """d(cable length)/d(24 parameters), shape (..., 24).

    Chain rule through the Euclidean norm: the unit vector from anchor to
    end-effector projected onto the position Jacobian.
    """
    pos = kin.ee_positions(params, thetas)
    diff = pos - model.anchor
    dist = np.linalg.norm(diff, axis=-1, keepdims=True)
    unit = diff / dist
    J = kin.position_jacobian(params, thetas)
    return np.einsum("...i,...ik->...k", unit, J)


# --- dataset-level operations ---

def nominal_cable_length(model: CableEncoderModel, chain: kin.DHChain, joints) -> float:
    """Encoder reading predicted by the given chain at one configuration."""
    return float(cable_lengths(model, chain.as_array(), kin.as_joints(joints)))


def residuals(model: CableEncoderModel, chain: kin.DHChain, dataset: Dataset) -> np.ndarray:
    """measured - predicted length per sample; the calibration error signal."""
    predicted = cable_lengths(model, chain.as_array(), dataset.joints_matrix())
    return dataset.lengths() - predicted


def simulate_dataset(
    model: CableEncoderModel,
    nominal: kin.DHChain,
    true_x: kin.KinematicErrorVector,
    n: int,
    noise_sigma: float,
    seed: int,
    joint_range: float = DEFAULT_JOINT_RANGE,
) -> Dataset:
    """Draw n joint configurations and read the encoder on the perturbed arm.

    Joints are uniform on [-joint_range, +joint_range] per axis; readings are
    taken from the chain with true_x applied, plus i.i.d. Gaussian noise.
    Deterministic for a fixed seed.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if not (np.isfinite(noise_sigma) and noise_sigma >= 0):
        raise InvalidArgumentError("noise_sigma must be finite and >= 0")
    rng = np.random.default_rng(seed)
    joints = rng.uniform(-joint_range, joint_range, size=(n, 6))
    true_params = kin.apply_errors(nominal, true_x).as_array()
    lengths = cable_lengths(model, true_params, joints)
    if noise_sigma > 0:
        lengths = lengths + rng.normal(0.0, noise_sigma, size=n)
    samples = tuple(Sample(q, length) for q, length in zip(joints, lengths))
    return Dataset(samples=samples, seed=seed)


def add_length_disturbance(dataset: Dataset, fn) -> Dataset:
    """New dataset with fn(joints) added to every measured length.

    Models a repeatable non-geometric effect (cable sag, encoder
    nonlinearity) that no parameter correction can express.
    """
    samples = tuple(
        Sample(s.joints, s.measured_length + float(fn(s.joints)))
        for s in dataset.samples
    )
    return Dataset(samples=samples, seed=None)


# --- CSV persistence ---

_CSV_HEADER = "theta1,theta2,theta3,theta4,theta5,theta6,measured_length"


def save_dataset(path, dataset: Dataset) -> None:
    lines = [_CSV_HEADER]
    for s in dataset.samples:
        fields = [repr(float(v)) for v in s.joints] + [repr(s.measured_length)]
        lines.append(",".join(fields))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != _CSV_HEADER:
        raise ParseError(f"{path}: line 1: expected header '{_CSV_HEADER}'")
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 7:
            raise ParseError(f"{path}: line {lineno}: expected 7 columns, got {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: non-numeric value") from None
        samples.append(Sample(np.array(values[:6]), values[6]))
    if not samples:
        raise InvalidArgumentError(f"{path}: dataset is empty")
    return Dataset(samples=tuple(samples))


def dataset_io(path, mode: str, dataset: Dataset | None = None) -> Dataset | None:
    """Single entry point for dataset persistence: mode 'read' or 'write'."""
    if mode == "read":
        return load_dataset(path)
    if mode == "write":
        if dataset is None:
            raise InvalidArgumentError("write mode needs a dataset")
        save_dataset(path, dataset)
        return None
    raise InvalidArgumentError(f"unknown mode {mode!r}; use 'read' or 'write'")

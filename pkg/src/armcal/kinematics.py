"""Forward kinematics and parameter sensitivities of a 6-joint serial arm.

The arm is described by four scalars per joint (link length ``a`` [mm], link
offset ``d`` [mm], joint angle offset ``theta_offset`` [rad], link twist
``alpha`` [rad]).  Homogeneous transforms are plain 4x4 numpy arrays.

Error vectors over the 24 kinematic parameters use a fixed flat ordering:
``(da1..da6, dd1..dd6, dtheta1..dtheta6, dalpha1..dalpha6)``.  Jacobian
columns follow the same ordering.

The array-level helpers (`ee_positions`, `position_jacobian`, ...) broadcast
over arbitrary leading dimensions so batches of chains and/or joint
configurations evaluate in one vectorized call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, ParseError

N_JOINTS = 6
N_PARAMS = 4 * N_JOINTS

PARAM_GROUPS = ("a", "d", "theta", "alpha")


@dataclass(frozen=True)
class DHLink:
    """One joint's nominal parameters: a, d [mm]; theta_offset, alpha [rad]."""

    a: float
    d: float
    theta_offset: float
    alpha: float

    def __post_init__(self):
        for name in ("a", "d", "theta_offset", "alpha"):
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = (self.a, self.d, self.theta_offset, self.alpha)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidArgumentError(f"link parameters must be finite, got {vals}")


@dataclass(frozen=True)
class DHChain:
    """Ordered parameters of all six joints, base to tip."""

    links: tuple[DHLink, ...]

    def __post_init__(self):
        if len(self.links) != N_JOINTS:
            raise InvalidArgumentError(
                f"chain needs exactly {N_JOINTS} links, got {len(self.links)}"
            )

    def as_array(self) -> np.ndarray:
        """(6, 4) array with columns (a, d, theta_offset, alpha)."""
        return np.array(
            [(l.a, l.d, l.theta_offset, l.alpha) for l in self.links], dtype=float
        )

    @classmethod
    def from_array(cls, params) -> "DHChain":
        params = np.asarray(params, dtype=float)
        if params.shape != (N_JOINTS, 4):
            raise InvalidArgumentError(f"expected (6, 4) parameter array, got {params.shape}")
        return cls(tuple(DHLink(*row) for row in params))


@dataclass(frozen=True)
class KinematicErrorVector:
    """Per-joint parameter deviations; flattens to 24 values in fixed order."""

    delta_a: np.ndarray
    delta_d: np.ndarray
    delta_theta: np.ndarray
    delta_alpha: np.ndarray

    def __post_init__(self):
        for name in ("delta_a", "delta_d", "delta_theta", "delta_alpha"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (N_JOINTS,):
                raise InvalidArgumentError(f"{name} must hold {N_JOINTS} values")
            object.__setattr__(self, name, arr)

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [self.delta_a, self.delta_d, self.delta_theta, self.delta_alpha]
        )

    @classmethod
    def from_flat(cls, x) -> "KinematicErrorVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (N_PARAMS,):
            raise InvalidArgumentError(f"expected {N_PARAMS} values, got shape {x.shape}")
        return cls(x[0:6], x[6:12], x[12:18], x[18:24])

    @classmethod
    def zeros(cls) -> "KinematicErrorVector":
        return cls.from_flat(np.zeros(N_PARAMS))

    def as_param_table(self) -> np.ndarray:
        """(6, 4) table of offsets matching DHChain.as_array columns."""
        return np.column_stack(
            [self.delta_a, self.delta_d, self.delta_theta, self.delta_alpha]
        )


def as_joints(joints) -> np.ndarray:
    """Validate and return a joint configuration as a (6,) float array."""
    q = np.asarray(joints, dtype=float)
    if q.shape != (N_JOINTS,):
        raise InvalidArgumentError(f"expected {N_JOINTS} joint angles, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise InvalidArgumentError("joint angles must be finite")
    return q


def flat_to_table(x) -> np.ndarray:
    """Reshape a flat 24-vector of offsets (group-major) to a (6, 4) table."""
    x = np.asarray(x, dtype=float)
    return x.reshape(4, N_JOINTS).T


def table_to_flat(table) -> np.ndarray:
    return np.asarray(table, dtype=float).T.reshape(N_PARAMS)


def rotation(transform: np.ndarray) -> np.ndarray:
    return transform[..., :3, :3]


def translation(transform: np.ndarray) -> np.ndarray:
    return transform[..., :3, 3]


# --- array-level core (broadcasts over leading dimensions) ---

def link_matrices(params, thetas) -> np.ndarray:
    """Per-link transforms Rz(theta)·Tz(d)·Tx(a)·Rx(alpha).

    params: (..., 6, 4), thetas: (..., 6) commanded angles (offsets are added
    here).  Returns (..., 6, 4, 4).
    """
    params = np.asarray(params, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    a = params[..., 0]
    d = params[..., 1]
    th = thetas + params[..., 2]
    al = params[..., 3]
    ct, st = np.cos(th), np.sin(th)
    ca, sa = np.cos(al), np.sin(al)
    T = np.zeros(np.broadcast(ct, ca).shape + (4, 4))
    T[..., 0, 0] = ct
    T[..., 0, 1] = -st * ca
    T[..., 0, 2] = st * sa
    T[..., 0, 3] = a * ct
    T[..., 1, 0] = st
    T[..., 1, 1] = ct * ca
    T[..., 1, 2] = -ct * sa
    T[..., 1, 3] = a * st
    T[..., 2, 1] = sa
    T[..., 2, 2] = ca
    T[..., 2, 3] = d
    T[..., 3, 3] = 1.0
    return T


def chain_transforms(params, thetas) -> np.ndarray:
    """Base-to-tip transform, (..., 4, 4)."""
    mats = link_matrices(params, thetas)
    T = mats[..., 0, :, :]
    for i in range(1, N_JOINTS):
        T = T @ mats[..., i, :, :]
    return T


def ee_positions(params, thetas) -> np.ndarray:
    """End-effector positions, (..., 3), in mm."""
    return translation(chain_transforms(params, thetas))


def _partial_products(mats):
    """Prefix[i] (product of links < i) and suffix[i] (product of links >= i)."""
    batch = mats.shape[:-3]
    eye = np.broadcast_to(np.eye(4), batch + (4, 4))
    prefix = [eye]
    for i in range(N_JOINTS):
        prefix.append(prefix[-1] @ mats[..., i, :, :])
    suffix = [eye]
    for i in reversed(range(N_JOINTS)):
        suffix.insert(0, mats[..., i, :, :] @ suffix[0])
    return prefix, suffix


def position_jacobian(params, thetas) -> np.ndarray:
    """Analytic d(position)/d(parameters), (..., 3, 24).

    Column k is the derivative of the end-effector position with respect to
    parameter k in the flat ordering.  Each per-link transform is
    differentiated in closed form and chained through the prefix/suffix
    products of the remaining links.
    """
    params = np.asarray(params, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    a = params[..., 0]
    th = thetas + params[..., 2]
    al = params[..., 3]
    ct, st = np.cos(th), np.sin(th)
    ca, sa = np.cos(al), np.sin(al)

    mats = link_matrices(params, thetas)
    prefix, suffix = _partial_products(mats)
    batch = mats.shape[:-3]
    J = np.zeros(batch + (3, N_PARAMS))

    for i in range(N_JOINTS):
        cti, sti = ct[..., i], st[..., i]
        cai, sai = ca[..., i], sa[..., i]
        ai = a[..., i]
        dT = np.zeros(batch + (4, 4, 4))  # stacked d/d(a, d, theta, alpha)
        # d/da: translation along the rotated x-axis
        dT[..., 0, 0, 3] = cti
        dT[..., 0, 1, 3] = sti
        # d/dd: translation along z
        dT[..., 1, 2, 3] = 1.0
        # d/dtheta
        dT[..., 2, 0, 0] = -sti
        dT[..., 2, 0, 1] = -cti * cai
        dT[..., 2, 0, 2] = cti * sai
        dT[..., 2, 0, 3] = -ai * sti
        dT[..., 2, 1, 0] = cti
        dT[..., 2, 1, 1] = -sti * cai
        dT[..., 2, 1, 2] = sti * sai
        dT[..., 2, 1, 3] = ai * cti
        # d/dalpha
        dT[..., 3, 0, 1] = sti * sai
        dT[..., 3, 0, 2] = sti * cai
        dT[..., 3, 1, 1] = -cti * sai
        dT[..., 3, 1, 2] = -cti * cai
        dT[..., 3, 2, 1] = cai
        dT[..., 3, 2, 2] = -sai

        pre = prefix[i][..., None, :, :]
        suf = suffix[i + 1][..., None, :, :]
        cols = (pre @ dT @ suf)[..., :3, 3]  # (..., 4, 3)
        for g in range(4):
            J[..., :, g * N_JOINTS + i] = cols[..., g, :]
    return J


# --- chain-level operations ---

def link_transform(link: DHLink, joint_angle: float) -> np.ndarray:
    """4x4 transform of one link at the given commanded joint angle."""
    if not np.isfinite(joint_angle):
        raise InvalidArgumentError("joint angle must be finite")
    params = np.array([[link.a, link.d, link.theta_offset, link.alpha]])
    return link_matrices(params, np.array([float(joint_angle)]))[0]


def forward_kinematics(chain: DHChain, joints) -> np.ndarray:
    """Base-to-end-effector 4x4 transform at the given joint configuration."""
    return chain_transforms(chain.as_array(), as_joints(joints))


def parameter_jacobian(chain: DHChain, joints) -> np.ndarray:
    """3x24 derivative of end-effector position w.r.t. kinematic parameters."""
    return position_jacobian(chain.as_array(), as_joints(joints))


def apply_errors(chain: DHChain, x: KinematicErrorVector) -> DHChain:
    """Chain with parameters incremented by x; the input is left untouched."""
    return DHChain.from_array(chain.as_array() + x.as_param_table())


def default_chain() -> DHChain:
    """Nominal desk-scale 6-axis arm used when no parameter file is given.

    Twists are all nonzero and distinct and a6 != 0, so every parameter
    except the tip twist influences the end-effector position (the tip twist
    never does: it only rotates the terminal frame).
    """
    return DHChain.from_array(
        np.array(
            [
                [150.0, 330.0, 0.0, -np.pi / 2],
                [280.0, 140.0, 0.0, np.pi / 4],
                [240.0, 110.0, 0.0, -np.pi / 3],
                [130.0, 300.0, 0.0, np.pi / 2],
                [100.0, 120.0, 0.0, -np.pi / 2],
                [80.0, 90.0, 0.0, np.pi / 3],
            ]
        )
    )


# --- robot parameter file (plain text, one row per joint) ---

_CHAIN_HEADER = """\
# armcal robot parameters
# one row per joint, base to tip; columns:
#   a[mm]  d[mm]  theta_offset[rad]  alpha[rad]
"""


def save_chain(path, chain: DHChain) -> None:
    rows = "\n".join(
        f"{l.a!r} {l.d!r} {l.theta_offset!r} {l.alpha!r}" for l in chain.links
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_CHAIN_HEADER + rows + "\n")


def load_chain(path) -> DHChain:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split()
            if len(fields) != 4:
                raise ParseError(
                    f"{path}: line {lineno}: expected 4 columns, got {len(fields)}"
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: non-numeric value") from None
    if len(rows) != N_JOINTS:
        raise ParseError(f"{path}: expected {N_JOINTS} parameter rows, got {len(rows)}")
    return DHChain.from_array(np.array(rows))

"""Minimal spatial-vector and dense-matrix kernel.

3D rotations, rigid transforms, 6D motion re-expression, joint motion /
constraint-force subspaces, and tolerance-based numerical rank.  All 6-vectors
use Plucker coordinates with the angular part in rows 0-2 and the linear part
in rows 3-5.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import (
    AntipodalRotationError,
    DimensionMismatchError,
    NonUnitAxisError,
    SingularDependentBlockError,
)

UNIT_AXIS_TOL = 1e-9


class JointType(enum.Enum):
    FIXED = "fixed"
    REVOLUTE = "revolute"
    CONTINUOUS = "continuous"
    PRISMATIC = "prismatic"
    UNIVERSAL = "universal"
    FLOATING = "floating"

    @property
    def dof(self) -> int:
        return _JOINT_DOF[self]

    @property
    def constraint_count(self) -> int:
        return 6 - _JOINT_DOF[self]

    @property
    def requires_axis(self) -> bool:
        return self in (
            JointType.REVOLUTE,
            JointType.CONTINUOUS,
            JointType.PRISMATIC,
            JointType.UNIVERSAL,
        )

    @property
    def motion_kind(self) -> str:
        """"rotation", "translation", or "mixed" (used by coupling checks)."""
        if self in (JointType.REVOLUTE, JointType.CONTINUOUS, JointType.UNIVERSAL):
            return "rotation"
        if self is JointType.PRISMATIC:
            return "translation"
        if self is JointType.FIXED:
            return "none"
        return "mixed"


_JOINT_DOF = {
    JointType.FIXED: 0,
    JointType.REVOLUTE: 1,
    JointType.CONTINUOUS: 1,
    JointType.PRISMATIC: 1,
    JointType.UNIVERSAL: 2,
    JointType.FLOATING: 6,
}


def _as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise DimensionMismatchError(f"expected a 3-vector, got shape {a.shape}")
    return a


def _check_unit_axis(axis: np.ndarray) -> np.ndarray:
    axis = _as_vec3(axis)
    if abs(np.linalg.norm(axis) - 1.0) > UNIT_AXIS_TOL:
        raise NonUnitAxisError(f"axis {axis.tolist()} is not unit-norm")
    return axis


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == cross(v, w)."""
    x, y, z = _as_vec3(v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_from_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Fixed-axis X-Y-Z rotation: Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def rpy_from_rot(r: np.ndarray) -> tuple[float, float, float]:
    """Inverse of rot_from_rpy (roll = 0 at the pitch = +/-pi/2 singularity)."""
    r = np.asarray(r, dtype=float)
    cos_pitch = math.hypot(r[0, 0], r[1, 0])
    pitch = math.atan2(-r[2, 0], cos_pitch)
    if cos_pitch > 1e-9:
        roll = math.atan2(r[2, 1], r[2, 2])
        yaw = math.atan2(r[1, 0], r[0, 0])
    else:
        roll = 0.0
        yaw = math.atan2(-r[0, 1], r[1, 1])
    return roll, pitch, yaw


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    axis = _check_unit_axis(axis)
    k = skew(axis)
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def so3_log(r: np.ndarray, antipodal_tol: float = 1e-9) -> np.ndarray:
    """Rotation vector (axis * angle) of a rotation matrix, angle in [0, pi].

    Raises AntipodalRotationError within `antipodal_tol` of a half-turn,
    where the direction of the axis becomes numerically meaningless for
    differentiation purposes.
    """
    r = np.asarray(r, dtype=float)
    cos_angle = np.clip((np.trace(r) - 1.0) * 0.5, -1.0, 1.0)
    angle = math.acos(cos_angle)
    if angle < 1e-12:
        # first-order: log(R) ~ vee(R - R^T)/2
        return 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if math.pi - angle < antipodal_tol:
        raise AntipodalRotationError(
            f"rotation angle {angle} is within {antipodal_tol} of pi"
        )
    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return w * (angle / (2.0 * math.sin(angle)))


class SpatialTransform:
    """Rigid pose of a child frame relative to a parent frame.

    Maps child-frame point coordinates into the parent frame:
    p_parent = rot @ p_child + trans.
    """

    __slots__ = ("rot", "trans")

    def __init__(self, rot=None, trans=None):
        self.rot = np.eye(3) if rot is None else np.array(rot, dtype=float)
        self.trans = np.zeros(3) if trans is None else _as_vec3(trans)
        if self.rot.shape != (3, 3):
            raise DimensionMismatchError(f"rotation must be 3x3, got {self.rot.shape}")

    @classmethod
    def identity(cls) -> "SpatialTransform":
        return cls()

    @classmethod
    def from_rpy_xyz(cls, rpy, xyz) -> "SpatialTransform":
        """Standard URDF origin semantics: position xyz, orientation rpy."""
        r, p, y = _as_vec3(rpy)
        return cls(rot_from_rpy(r, p, y), xyz)

    def apply(self, point) -> np.ndarray:
        return self.rot @ _as_vec3(point) + self.trans

    def is_identity(self, tol: float = 0.0) -> bool:
        return bool(
            np.all(np.abs(self.rot - np.eye(3)) <= tol)
            and np.all(np.abs(self.trans) <= tol)
        )

    def __repr__(self) -> str:
        return f"SpatialTransform(rot={self.rot.tolist()}, trans={self.trans.tolist()})"


def compose(a: SpatialTransform, b: SpatialTransform) -> SpatialTransform:
    """Pose composition: the result maps coordinates through b, then a."""
    return SpatialTransform(a.rot @ b.rot, a.rot @ b.trans + a.trans)


def invert(x: SpatialTransform) -> SpatialTransform:
    rt = x.rot.T
    return SpatialTransform(rt, -(rt @ x.trans))


def motion_map(x: SpatialTransform, v) -> np.ndarray:
    """Re-express a 6D spatial motion vector in the parent frame of `x`.

    `v` is given in the child frame of `x` with its reference point at the
    child origin; the result is expressed in the parent frame with its
    reference point at the parent origin.  The linear part picks up the
    lever-arm term trans x (rot @ omega), the sign of which is pinned by the
    finite-difference point-velocity oracle in the test suite.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[0] != 6:
        raise DimensionMismatchError(f"expected 6 rows, got shape {v.shape}")
    w = x.rot @ v[:3]
    if v.ndim == 1:
        lever = np.cross(x.trans, w)
    else:
        lever = np.cross(x.trans[None, :], w.T).T
    return np.concatenate([w, x.rot @ v[3:] + lever], axis=0)


def orthonormal_complement_2(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing `axis` to a right-handed orthonormal triad.

    Deterministic: Gram-Schmidt against the canonical basis vector least
    aligned with `axis` (first index on ties).
    """
    axis = _check_unit_axis(axis)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(axis)))] = 1.0
    b = e - np.dot(e, axis) * axis
    b /= np.linalg.norm(b)
    c = np.cross(axis, b)
    return b, c


def default_second_axis(axis) -> np.ndarray:
    """Deterministic second rotation axis for a universal joint lacking one."""
    b, _ = orthonormal_complement_2(_check_unit_axis(axis))
    return b


def _require_axes(jt: JointType, axis, axis2):
    a1 = _check_unit_axis(axis) if axis is not None else None
    if jt.requires_axis and a1 is None:
        raise NonUnitAxisError(f"joint type {jt.value} requires an axis")
    if jt is JointType.UNIVERSAL:
        a2 = _check_unit_axis(axis2) if axis2 is not None else default_second_axis(a1)
        if abs(np.dot(a1, a2)) > 1e-9:
            raise NonUnitAxisError("universal joint axes must be orthogonal")
        return a1, a2
    return a1, None


def motion_subspace(jt: JointType, axis=None, axis2=None) -> np.ndarray:
    """6 x n matrix of unit motion directions permitted by the joint,
    expressed at the joint's zero configuration."""
    a1, a2 = _require_axes(jt, axis, axis2)
    if jt is JointType.FIXED:
        return np.zeros((6, 0))
    if jt in (JointType.REVOLUTE, JointType.CONTINUOUS):
        return np.concatenate([a1, np.zeros(3)]).reshape(6, 1)
    if jt is JointType.PRISMATIC:
        return np.concatenate([np.zeros(3), a1]).reshape(6, 1)
    if jt is JointType.UNIVERSAL:
        s = np.zeros((6, 2))
        s[:3, 0] = a1
        s[:3, 1] = a2
        return s
    return np.eye(6)  # floating


def motion_subspace_at(jt: JointType, axis, axis2, q) -> np.ndarray:
    """Motion subspace at joint position q, expressed in the child frame.

    Identical to motion_subspace() for joints whose subspace does not move
    with the configuration (fixed, revolute, continuous, prismatic).  For a
    universal joint the first axis is carried back through the second
    rotation; for a floating joint the angular columns are the fixed-axis
    X-Y-Z rate directions and the linear columns are the parent-side
    translation rates re-expressed in the child frame.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if q.shape[0] != jt.dof:
        raise DimensionMismatchError(
            f"joint type {jt.value} takes {jt.dof} coordinates, got {q.shape[0]}"
        )
    if jt is JointType.UNIVERSAL:
        a1, a2 = _require_axes(jt, axis, axis2)
        s = np.zeros((6, 2))
        s[:3, 0] = rotation_about_axis(a2, q[1]).T @ a1
        s[:3, 1] = a2
        return s
    if jt is JointType.FLOATING:
        roll, pitch = q[0], q[1]
        r = rot_from_rpy(q[0], q[1], q[2])
        s = np.zeros((6, 6))
        s[:3, 0] = np.array([1.0, 0.0, 0.0])
        s[:3, 1] = rot_x(roll).T @ np.array([0.0, 1.0, 0.0])
        s[:3, 2] = rot_x(roll).T @ rot_y(pitch).T @ np.array([0.0, 0.0, 1.0])
        s[3:, 3:] = r.T
        return s
    return motion_subspace(jt, axis, axis2)


def constraint_force_subspace(jt: JointType, axis=None, axis2=None) -> np.ndarray:
    """6 x (6 - n) orthonormal complement of the motion subspace."""
    a1, a2 = _require_axes(jt, axis, axis2)
    if jt is JointType.FIXED:
        return np.eye(6)
    if jt is JointType.FLOATING:
        return np.zeros((6, 0))
    if jt in (JointType.REVOLUTE, JointType.CONTINUOUS):
        b, c = orthonormal_complement_2(a1)
        psi = np.zeros((6, 5))
        psi[:3, 0] = b
        psi[:3, 1] = c
        psi[3:, 2:] = np.eye(3)
        return psi
    if jt is JointType.PRISMATIC:
        b, c = orthonormal_complement_2(a1)
        psi = np.zeros((6, 5))
        psi[:3, :3] = np.eye(3)
        psi[3:, 3] = b
        psi[3:, 4] = c
        return psi
    # universal: the blocked rotation direction plus all translations
    n = np.cross(a1, a2)
    n /= np.linalg.norm(n)
    psi = np.zeros((6, 4))
    psi[:3, 0] = n
    psi[3:, 1:] = np.eye(3)
    return psi


def joint_transform(jt: JointType, axis, axis2, q) -> SpatialTransform:
    """Pose of the child-side joint frame for joint position q."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if q.shape[0] != jt.dof:
        raise DimensionMismatchError(
            f"joint type {jt.value} takes {jt.dof} coordinates, got {q.shape[0]}"
        )
    a1, a2 = _require_axes(jt, axis, axis2)
    if jt is JointType.FIXED:
        return SpatialTransform.identity()
    if jt in (JointType.REVOLUTE, JointType.CONTINUOUS):
        return SpatialTransform(rotation_about_axis(a1, q[0]))
    if jt is JointType.PRISMATIC:
        return SpatialTransform(trans=q[0] * a1)
    if jt is JointType.UNIVERSAL:
        return SpatialTransform(
            rotation_about_axis(a1, q[0]) @ rotation_about_axis(a2, q[1])
        )
    # floating: rotate by rpy, place the child origin at xyz
    return SpatialTransform(rot_from_rpy(q[0], q[1], q[2]), q[3:6])


def numerical_rank(m, tol: float = 1e-10) -> int:
    """Rank by row reduction with partial pivoting.

    A pivot is accepted when its magnitude exceeds tol times the largest
    absolute entry of the original matrix.  The zero matrix has rank 0.
    """
    return len(row_reduce_basis(m, tol))


def row_reduce_basis(m, tol: float = 1e-10) -> np.ndarray:
    """Row-space basis via Gaussian elimination with partial pivoting.

    Returns the accepted pivot rows of the reduced matrix (full row rank,
    same row space as the input).  The pivot-acceptance threshold is
    relative to the largest absolute entry of the original matrix.
    """
    a = np.array(m, dtype=float, ndmin=2)
    if a.size == 0:
        return a.reshape(0, a.shape[1] if a.ndim == 2 else 0)
    threshold = tol * np.abs(a).max()
    if threshold == 0.0:
        return np.zeros((0, a.shape[1]))
    rows, cols = a.shape
    row = 0
    for col in range(cols):
        if row == rows:
            break
        pivot = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[pivot, col]) <= threshold:
            continue
        if pivot != row:
            a[[row, pivot]] = a[[pivot, row]]
        factors = a[row + 1 :, col] / a[row, col]
        a[row + 1 :] -= np.outer(factors, a[row])
        a[row + 1 :, col] = 0.0
        row += 1
    return a[:row]


def solve_with_pivoting(a, b, tol: float = 1e-10) -> np.ndarray:
    """Solve a @ x = b by Gaussian elimination with partial pivoting.

    Raises SingularDependentBlockError when any pivot falls below tol times
    the largest absolute entry of `a`; no least-squares fallback.
    """
    a = np.array(a, dtype=float, ndmin=2)
    b = np.array(b, dtype=float)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"matrix must be square, got {a.shape}")
    n = a.shape[0]
    if b.ndim == 1:
        b = b.reshape(n, 1)
        squeeze = True
    else:
        squeeze = False
    if b.shape[0] != n:
        raise DimensionMismatchError("right-hand side row count mismatch")
    if n == 0:
        return b[:, 0] if squeeze else b
    threshold = tol * max(np.abs(a).max(), 1e-300)
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) <= threshold:
            raise SingularDependentBlockError(
                f"pivot {a[pivot, col]:.3e} below tolerance in column {col}"
            )
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        factors = a[col + 1 :, col] / a[col, col]
        a[col + 1 :] -= np.outer(factors, a[col])
        b[col + 1 :] -= np.outer(factors, b[col])
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x[:, 0] if squeeze else x

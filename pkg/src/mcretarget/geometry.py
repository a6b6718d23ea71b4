"""Rotation and rigid-transform primitives.

Conventions used throughout the package:
  * rotations map local coordinates to world coordinates (R = world<-local),
  * quaternions are (w, x, y, z) and kept unit-norm,
  * 6-vectors pair as [angular(3); linear(3)],
  * spatial increments are world-frame twists applied about the frame origin:
    R <- exp(hat(w)) @ R, p <- p + v.
"""

from __future__ import annotations

import numpy as np


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(v) @ u == cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_exp(w: np.ndarray) -> np.ndarray:
    """Rodrigues' formula: rotation matrix for the axis-angle vector w."""
    angle = float(np.linalg.norm(w))
    if angle < 1e-12:
        # second-order series keeps exp/log round trips tight near zero
        W = hat(w)
        return np.eye(3) + W + 0.5 * (W @ W)
    axis = w / angle
    W = hat(axis)
    s, c = np.sin(angle), np.cos(angle)
    return np.eye(3) + s * W + (1.0 - c) * (W @ W)


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix, angle in [0, pi].

    At angle exactly pi the axis sign is ambiguous; the axis with the
    largest diagonal element of R is chosen, sign fixed so the first
    nonzero component is positive.
    """
    trace = float(np.trace(R))
    cos_angle = min(1.0, max(-1.0, 0.5 * (trace - 1.0)))
    angle = float(np.arccos(cos_angle))
    if angle < 1e-10:
        # series: log(R) ~ vee(R - R^T)/2 for small angles
        return 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if angle > np.pi - 1e-7:
        # R ~ 2 aa^T - I: recover axis from the largest diagonal entry
        k = int(np.argmax(np.diag(R)))
        axis = np.sqrt(np.maximum((np.diag(R) + 1.0) / 2.0, 0.0))
        # off-diagonal signs relative to component k
        for i in range(3):
            if i != k and R[i, k] + R[k, i] < 0.0:
                axis[i] = -axis[i]
        if axis[k] < 0.0:
            axis = -axis
        norm = float(np.linalg.norm(axis))
        axis = axis / norm
        for comp in axis:
            if abs(comp) > 1e-12:
                if comp < 0.0:
                    axis = -axis
                break
        return angle * axis
    vee = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return vee * (angle / np.sin(angle))


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(R: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0."""
    t = float(np.trace(R))
    if t > 0.0:
        s = np.sqrt(t + 1.0)
        w = 0.5 * s
        s = 0.5 / s
        q = np.array([w, (R[2, 1] - R[1, 2]) * s, (R[0, 2] - R[2, 0]) * s, (R[1, 0] - R[0, 1]) * s])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(R[i, i] - R[j, j] - R[k, k] + 1.0, 0.0))
        qi = 0.5 * s
        s = 0.5 / s
        q = np.zeros(4)
        q[0] = (R[k, j] - R[j, k]) * s
        q[1 + i] = qi
        q[1 + j] = (R[j, i] + R[i, j]) * s
        q[1 + k] = (R[k, i] + R[i, k]) * s
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def normalize_quat(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero quaternion")
    q = q / n
    return -q if q[0] < 0.0 else q


class Pose:
    """Rigid transform: rotation matrix (world<-local) plus world position."""

    __slots__ = ("rotation", "position")

    def __init__(self, rotation: np.ndarray | None = None, position: np.ndarray | None = None):
        if rotation is None:
            self.rotation = np.eye(3)
        else:
            self.rotation = rotation if type(rotation) is np.ndarray else np.asarray(rotation, dtype=float)
        if position is None:
            self.position = np.zeros(3)
        else:
            self.position = position if type(position) is np.ndarray else np.asarray(position, dtype=float)

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_rpy(xyz, rpy) -> "Pose":
        """URDF-style fixed-axis roll/pitch/yaw plus translation."""
        r, p, y = rpy
        Rz = rotation_exp(np.array([0.0, 0.0, y]))
        Ry = rotation_exp(np.array([0.0, p, 0.0]))
        Rx = rotation_exp(np.array([r, 0.0, 0.0]))
        return Pose(Rz @ Ry @ Rx, np.asarray(xyz, dtype=float))

    def compose(self, other: "Pose") -> "Pose":
        """self * other: apply other in self's local frame."""
        return Pose(self.rotation @ other.rotation, self.position + self.rotation @ other.position)

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return self.position + self.rotation @ np.asarray(p, dtype=float)

    def inverse(self) -> "Pose":
        RT = self.rotation.T
        return Pose(RT, -RT @ self.position)

    def copy(self) -> "Pose":
        return Pose(self.rotation.copy(), self.position.copy())

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Pose(p={np.array2string(self.position, precision=4)})"


def pose_difference(a: Pose, b: Pose) -> np.ndarray:
    """World-frame 6-vector [log(Ra Rb^T); pa - pb] separating two poses.

    First-order consistent with the frame Jacobians: moving b by the
    world twist eps*J*dq shrinks the difference by the same amount.
    """
    return np.concatenate([rotation_log(a.rotation @ b.rotation.T), a.position - b.position])


def pose_step(pose: Pose, twist: np.ndarray) -> Pose:
    """Apply a world-frame increment [angular; linear] about the pose origin."""
    return Pose(rotation_exp(twist[:3]) @ pose.rotation, pose.position + twist[3:])


def clamp_vector(v: np.ndarray, bound: float) -> np.ndarray:
    """Componentwise clamp to [-bound, bound]."""
    return np.clip(v, -bound, bound)


def clamp_norm(v: np.ndarray, bound: float) -> np.ndarray:
    """Scale v down so its 2-norm does not exceed bound."""
    n = float(np.sqrt(v @ v))
    if n <= bound or n < 1e-15:
        return np.asarray(v, dtype=float)
    return v * (bound / n)

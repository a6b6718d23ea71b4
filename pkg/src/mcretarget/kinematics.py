"""Forward kinematics, frame Jacobians, configuration integration.

Tangent-space layout (dimension 6 + n): columns 0..2 are world-frame
base rotations about the base origin, 3..5 world-frame base
translations, 6.. the actuated joints in document order.  Jacobian rows
pair as [angular(3); linear(3)] in world frame at the frame origin.
"""

from __future__ import annotations

import numpy as np

import math

from .geometry import Pose, hat, normalize_quat, quat_multiply, rotation_exp
from .model import FIXED, PRISMATIC, REVOLUTE, GeneralizedPosition, ModelError, RobotModel


def cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product over trailing axis 3; avoids np.cross overhead."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    out[..., 0] = a1 * b2 - a2 * b1
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def _joint_rotation_tables(joint) -> tuple[np.ndarray, np.ndarray]:
    tabs = getattr(joint, "_rot_tabs", None)
    if tabs is None:
        W = hat(joint.axis)
        tabs = (W, W @ W)
        joint._rot_tabs = tabs
    return tabs


def _ancestry(model: RobotModel) -> np.ndarray:
    """Boolean (nv, nbodies): tangent column k moves body b. Cached on the model."""
    cached = getattr(model, "_ancestry", None)
    if cached is not None:
        return cached
    nv, nb = model.nv, len(model.bodies)
    anc = np.zeros((nv, nb), dtype=bool)
    anc[0:6, :] = True  # base moves everything
    for b in model.topological_order:
        body = model.bodies[b]
        if body.parent_joint is None:
            continue
        joint = model.joints[body.parent_joint]
        anc[:, b] = anc[:, joint.parent]
        if joint.dof is not None:
            anc[6 + joint.dof, b] = True
    model._ancestry = anc
    return anc


class KinematicsCache:
    """World-frame kinematic data for one (model, q) pair.

    Builds the per-column axis/anchor arrays once so the Jacobians and
    the statics derivatives are vectorized lookups.
    """

    def __init__(self, model: RobotModel, q: GeneralizedPosition):
        self.model = model
        self.q = q
        nv = model.nv
        self.ancestry = _ancestry(model)

        base = q.base.pose()
        nb = len(model.bodies)
        rot = np.empty((nb, 3, 3))
        pos = np.empty((nb, 3))
        rot[model.root] = base.rotation
        pos[model.root] = base.position
        axes = np.zeros((nv, 3))
        anchors = np.zeros((nv, 3))
        is_rot = np.zeros(nv, dtype=bool)
        child_body = np.full(nv, model.root, dtype=int)

        axes[0:3] = np.eye(3)
        axes[3:6] = np.eye(3)
        is_rot[0:3] = True
        anchors[0:3] = base.position

        eye3 = np.eye(3)
        theta_all = q.joints
        for b in model.topological_order:
            body = model.bodies[b]
            if body.parent_joint is None:
                continue
            joint = model.joints[body.parent_joint]
            parent = joint.parent
            origin = joint.origin
            R_pre = rot[parent] @ origin.rotation
            p_pre = pos[parent] + rot[parent] @ origin.position
            if joint.jtype == FIXED:
                rot[b] = R_pre
                pos[b] = p_pre
                continue
            theta = float(theta_all[joint.dof])
            world_axis = R_pre @ joint.axis
            if joint.jtype == REVOLUTE:
                W, W2 = _joint_rotation_tables(joint)
                local = eye3 + math.sin(theta) * W + (1.0 - math.cos(theta)) * W2
                rot[b] = R_pre @ local
                pos[b] = p_pre
                is_rot[6 + joint.dof] = True
                anchors[6 + joint.dof] = p_pre
            elif joint.jtype == PRISMATIC:
                rot[b] = R_pre
                pos[b] = p_pre + theta * world_axis
            else:  # pragma: no cover - parser rejects other types
                raise ModelError(f"unsupported joint type '{joint.jtype}'")
            axes[6 + joint.dof] = world_axis
            child_body[6 + joint.dof] = b

        self.body_rot = rot
        self.body_pos = pos
        self.body_poses: list[Pose] = [Pose(rot[i], pos[i]) for i in range(nb)]
        self.axes = axes
        self.anchors = anchors
        self.is_rot = is_rot
        self.child_body = child_body
        self._com_world: np.ndarray | None = None
        self._anchor_lin_jac: np.ndarray | None = None
        self._rot_mask2: np.ndarray | None = None

    @property
    def nv(self) -> int:
        return self.model.nv

    def com_world(self) -> np.ndarray:
        """(nbodies, 3) world positions of body centers of mass."""
        if self._com_world is None:
            coms = getattr(self.model, "_local_coms", None)
            if coms is None:
                coms = np.array([b.com for b in self.model.bodies])
                self.model._local_coms = coms
            self._com_world = self.body_pos + np.einsum("bij,bj->bi", self.body_rot, coms)
        return self._com_world

    def frame_pose(self, body: int, offset: Pose) -> Pose:
        return self.body_poses[body].compose(offset)

    def effector_pose(self, name: str) -> Pose:
        eff = self.model.effector(name)
        return self.frame_pose(eff.body, eff.offset)

    def linear_jacobian(self, body: int, point: np.ndarray) -> np.ndarray:
        """(3, nv) world-frame Jacobian of a point attached to a body."""
        mask = self.ancestry[:, body]
        rot = self.is_rot & mask
        lin = (~self.is_rot) & mask
        cols = np.where(rot[:, None], cross_rows(self.axes, point - self.anchors), 0.0)
        cols += np.where(lin[:, None], self.axes, 0.0)
        return cols.T

    def angular_jacobian(self, body: int) -> np.ndarray:
        mask = self.ancestry[:, body] & self.is_rot
        return np.where(mask[:, None], self.axes, 0.0).T

    def jacobian(self, body: int, point: np.ndarray) -> np.ndarray:
        """(6, nv) [angular; linear] world-frame Jacobian at a point."""
        return np.vstack([self.angular_jacobian(body), self.linear_jacobian(body, point)])

    def anchor_linear_jacobians(self) -> tuple[np.ndarray, np.ndarray]:
        """Linear Jacobians of every column's anchor point.

        Returns (AJ, rot_mask2): AJ[j, k, :] is column k of the linear
        Jacobian of column j's anchor (a material point of column j's
        child body); rot_mask2[j, k] marks rotational columns k moving
        that body.  Used by the statics derivatives.
        """
        if self._anchor_lin_jac is None:
            nv = self.nv
            anc_cols = self.ancestry[:, self.child_body].T  # [j, k]: k moves child of j
            rot2 = anc_cols & self.is_rot[None, :]
            lin2 = anc_cols & (~self.is_rot[None, :])
            cross = cross_rows(
                self.axes[None, :, :], self.anchors[:, None, :] - self.anchors[None, :, :]
            )
            aj = np.where(rot2[:, :, None], cross, 0.0)
            aj += np.where(lin2[:, :, None], self.axes[None, :, :], 0.0)
            self._anchor_lin_jac = aj
            self._rot_mask2 = rot2
        return self._anchor_lin_jac, self._rot_mask2


def _resolve_frame(model: RobotModel, frame: str) -> tuple[int, Pose]:
    if model.has_effector(frame):
        eff = model.effector(frame)
        return eff.body, eff.offset
    try:
        return model.body(frame).index, Pose.identity()
    except ModelError:
        raise ModelError(f"unknown frame '{frame}'") from None


def forward_kinematics(model: RobotModel, q: GeneralizedPosition, frame: str) -> Pose:
    """World pose of an end-effector or body frame."""
    body, offset = _resolve_frame(model, frame)
    return KinematicsCache(model, q).frame_pose(body, offset)


def frame_jacobian(model: RobotModel, q: GeneralizedPosition, frame: str) -> np.ndarray:
    """(6, 6+n) world-frame Jacobian of a named frame."""
    body, offset = _resolve_frame(model, frame)
    cache = KinematicsCache(model, q)
    pose = cache.frame_pose(body, offset)
    return cache.jacobian(body, pose.position)


def integrate_configuration(q: GeneralizedPosition, dq: np.ndarray) -> GeneralizedPosition:
    """Apply a tangent increment: joints add, base composes the exponential."""
    dq = np.asarray(dq, dtype=float)
    if dq.shape != (6 + q.joints.shape[0],):
        raise ValueError(f"increment has dimension {dq.shape[0]}, expected {6 + q.joints.shape[0]}")
    out = q.copy()
    w = dq[0:3]
    angle = float(np.linalg.norm(w))
    if angle > 0.0:
        axis = w / angle if angle > 1e-12 else w
        half = 0.5 * angle
        dquat = np.concatenate([[np.cos(half)], np.sin(half) * axis])
        out.base.quaternion = normalize_quat(quat_multiply(dquat, out.base.quaternion))
    out.base.position = out.base.position + dq[3:6]
    out.joints = out.joints + dq[6:]
    return out

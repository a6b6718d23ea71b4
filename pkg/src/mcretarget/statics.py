"""Quasi-static force terms and their configuration derivatives.

Everything here reduces to one primitive: the generalized torque
J_F(q)^T w of a wrench w held constant in world frame at a frame F, and
its directional derivative in q.  Gravity uses per-body weight forces
at the centers of mass; contact terms use the anchored contact wrenches
mapped to world by the (constant) anchor rotation.  Loads are kept as
arrays so the whole batch is a handful of vectorized contractions.
"""

from __future__ import annotations

import numpy as np

from .contacts import ContactSet, PLANE
from .geometry import Pose
from .kinematics import KinematicsCache, cross_rows
from .model import GRAVITY, GeneralizedPosition, RobotModel


class Loads:
    """Constant world-frame wrenches (torque, force) at body points."""

    __slots__ = ("body", "point", "torque", "force")

    def __init__(self, body, point, torque, force):
        self.body = np.asarray(body, dtype=int)
        self.point = np.asarray(point, dtype=float).reshape(-1, 3)
        self.torque = np.asarray(torque, dtype=float).reshape(-1, 3)
        self.force = np.asarray(force, dtype=float).reshape(-1, 3)

    def __len__(self) -> int:
        return self.body.shape[0]

    @staticmethod
    def empty() -> "Loads":
        return Loads(np.zeros(0, dtype=int), np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3)))

    @staticmethod
    def concat(parts: list["Loads"]) -> "Loads":
        return Loads(
            np.concatenate([p.body for p in parts]),
            np.concatenate([p.point for p in parts]),
            np.concatenate([p.torque for p in parts]),
            np.concatenate([p.force for p in parts]),
        )

    def negated(self) -> "Loads":
        return Loads(self.body, self.point, -self.torque, -self.force)


def gravity_loads(cache: KinematicsCache) -> Loads:
    # G(q) is the generalized force balancing the weights: the support
    # force m*g*z_hat at each center of mass, transported through J^T
    loads = getattr(cache, "_gravity_loads", None)
    if loads is None:
        com = cache.com_world()
        idx = np.array([b.index for b in cache.model.bodies if b.mass > 0.0], dtype=int)
        forces = np.zeros((idx.shape[0], 3))
        forces[:, 2] = [cache.model.bodies[i].mass * GRAVITY for i in idx]
        loads = Loads(idx, com[idx], np.zeros((idx.shape[0], 3)), forces)
        cache._gravity_loads = loads
    return loads


def generalized_load_torques(cache: KinematicsCache, loads: Loads) -> np.ndarray:
    """sum_F J_F(q)^T w_F over the loads, an (nv,) vector."""
    if len(loads) == 0:
        return np.zeros(cache.nv)
    axes, anchors, is_rot = cache.axes, cache.anchors, cache.is_rot
    path = cache.ancestry[:, loads.body]  # (nv, L)
    # rotational columns see the torque transported to their anchor
    g = loads.torque[None, :, :] + cross_rows(
        loads.point[None, :, :] - anchors[:, None, :], loads.force[None, :, :]
    )
    rot_part = np.einsum("jld,jd->jl", g, axes)
    lin_part = loads.force @ axes.T  # (L, nv)
    per = np.where(is_rot[:, None], rot_part, lin_part.T)
    return np.sum(per * path, axis=1)


def generalized_load_jacobian(cache: KinematicsCache, loads: Loads) -> np.ndarray:
    """d/dq of generalized_load_torques at fixed world wrenches.

    For rotational column j with axis a_j, anchor p_j and child body
    c_j, the transported torque is a_j . (m + (p_F - p_j) x f); its
    derivative splits into the axis rotation (a_j x g)^T J_ang(c_j) and
    the lever change (f x a_j)^T (J_lin(F) - J_lin(p_j)).  Base angular
    columns have fixed world axes, so only the lever term remains; base
    linear and prismatic force rows are constant.
    """
    nv = cache.nv
    if len(loads) == 0:
        return np.zeros((nv, nv))
    axes, anchors, is_rot = cache.axes, cache.anchors, cache.is_rot
    anchor_jac, rot_mask2 = cache.anchor_linear_jacobians()
    joint_rot = is_rot.copy()
    joint_rot[0:3] = False  # base angular axes do not rotate
    prismatic = (~is_rot).copy()
    prismatic[3:6] = False

    path = cache.ancestry[:, loads.body]  # (nv, L)
    lever = loads.point[None, :, :] - anchors[:, None, :]  # (nv, L, 3)
    g = loads.torque[None, :, :] + cross_rows(lever, loads.force[None, :, :])
    # term 1: rotating axes
    V = np.where(
        joint_rot[:, None, None],
        cross_rows(axes[:, None, :], g),
        0.0,
    )
    V += np.where(
        prismatic[:, None, None],
        cross_rows(axes[:, None, :], np.broadcast_to(loads.force[None, :, :], g.shape)),
        0.0,
    )
    V_sum = np.einsum("jld,jl->jd", V, path)
    H = (V_sum @ axes.T) * rot_mask2
    # term 2: moving application and anchor points
    U = np.where(
        is_rot[:, None, None],
        cross_rows(np.broadcast_to(loads.force[None, :, :], g.shape), axes[:, None, :]),
        0.0,
    )
    U *= path[:, :, None]
    # frame columns: linear Jacobian of each load point, (L, nv, 3)
    frame_path = cache.ancestry[:, loads.body].T  # (L, nv)
    fc = np.where(
        (frame_path & is_rot[None, :])[:, :, None],
        cross_rows(axes[None, :, :], loads.point[:, None, :] - anchors[None, :, :]),
        0.0,
    )
    fc += np.where((frame_path & ~is_rot[None, :])[:, :, None], axes[None, :, :], 0.0)
    H += np.einsum("jld,lkd->jk", U, fc)
    H -= np.einsum("jd,jkd->jk", np.sum(U, axis=1), anchor_jac)
    return H


def gravity_vector(model: RobotModel, q: GeneralizedPosition) -> np.ndarray:
    """Generalized gravity G(q): base rows carry the total weight wrench."""
    return gravity_vector_cached(KinematicsCache(model, q))


def gravity_vector_cached(cache: KinematicsCache) -> np.ndarray:
    G = getattr(cache, "_gravity_vector", None)
    if G is None:
        G = generalized_load_torques(cache, gravity_loads(cache))
        cache._gravity_vector = G
    return G


def gravity_jacobian(model: RobotModel, q: GeneralizedPosition) -> np.ndarray:
    """dG/dq in the tangent-space convention of the frame Jacobians."""
    return gravity_jacobian_cached(KinematicsCache(model, q))


def gravity_jacobian_cached(cache: KinematicsCache) -> np.ndarray:
    dG = getattr(cache, "_gravity_jacobian", None)
    if dG is None:
        dG = generalized_load_jacobian(cache, gravity_loads(cache))
        cache._gravity_jacobian = dG
    return dG


def split_stacked_wrench(contacts: ContactSet, lam: np.ndarray) -> list[np.ndarray]:
    """Per-contact slices of a stacked wrench vector, stacking order."""
    entries = contacts.constrained()
    total = sum(e.spec.dim for e in entries)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (total,):
        raise ValueError(f"stacked wrench has dimension {lam.shape}, expected ({total},)")
    out, k = [], 0
    for e in entries:
        out.append(lam[k : k + e.spec.dim])
        k += e.spec.dim
    return out


def contact_loads(cache: KinematicsCache, contacts: ContactSet, lam: np.ndarray) -> Loads:
    """World-frame loads of the stacked anchor-local contact wrenches."""
    model = cache.model
    entries = contacts.constrained()
    if not entries:
        return Loads.empty()
    body, point, torque, force = [], [], [], []
    for entry, w in zip(entries, split_stacked_wrench(contacts, lam)):
        eff = model.effector(entry.name)
        pose = cache.frame_pose(eff.body, eff.offset)
        R = entry.state.anchor.rotation
        body.append(eff.body)
        point.append(pose.position)
        if entry.spec.kind == PLANE:
            torque.append(R @ w[:3])
            force.append(R @ w[3:])
        else:
            torque.append(np.zeros(3))
            force.append(R @ w)
    return Loads(body, point, torque, force)


def contact_hessian_product(
    model: RobotModel, q: GeneralizedPosition, contacts: ContactSet, lam: np.ndarray
) -> np.ndarray:
    """H with H dq = d(J^T lambda)/dq dq at fixed lambda, without the rank-3 tensor."""
    cache = KinematicsCache(model, q)
    return contact_hessian_product_cached(cache, contacts, lam)


def contact_hessian_product_cached(
    cache: KinematicsCache, contacts: ContactSet, lam: np.ndarray
) -> np.ndarray:
    return generalized_load_jacobian(cache, contact_loads(cache, contacts, lam))


def contact_wrench_jacobian(cache: KinematicsCache, entry) -> np.ndarray:
    """Jacobian pairing with the contact's anchor-local wrench.

    Rows are the local wrench components: J_hat such that J_hat^T
    lambda_local equals J_world^T (world wrench).  Plane contacts give
    6 rows [torque; force], point contacts the 3 force rows.
    """
    eff = cache.model.effector(entry.name)
    pose = cache.frame_pose(eff.body, eff.offset)
    R = entry.state.anchor.rotation
    J = cache.jacobian(eff.body, pose.position)
    if entry.spec.kind == PLANE:
        return np.vstack([R.T @ J[:3], R.T @ J[3:]])
    return R.T @ J[3:]


def stacked_contact_jacobian(cache: KinematicsCache, contacts: ContactSet) -> np.ndarray:
    """(l, nv) stack of the anchor-local contact Jacobians."""
    rows = [contact_wrench_jacobian(cache, e) for e in contacts.constrained()]
    if not rows:
        return np.zeros((0, cache.nv))
    return np.vstack(rows)


def equilibrium_residual(
    model: RobotModel,
    q: GeneralizedPosition,
    tau: np.ndarray,
    contacts: ContactSet,
    lam: np.ndarray,
) -> np.ndarray:
    """G(q) - S tau - J(q)^T lambda over the 6+n generalized rows."""
    cache = KinematicsCache(model, q)
    residual = gravity_vector_cached(cache).copy()
    residual -= generalized_load_torques(cache, contact_loads(cache, contacts, lam))
    residual[6:] -= tau
    return residual


def frame_from_normal(normal: np.ndarray) -> np.ndarray:
    """Deterministic rotation whose +z column is the given unit normal."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    ref = np.eye(3)[int(np.argmin(np.abs(n)))]
    x = ref - (ref @ n) * n
    x /= np.linalg.norm(x)
    y = np.cross(n, x)
    return np.column_stack([x, y, n])


def contact_anchor_from_pose(spec, pose: Pose) -> Pose:
    """Anchor captured at contact establishment.

    Plane contacts anchor the full frame pose; point contacts anchor
    the position with the local frame built from the surface normal.
    """
    if spec.kind == PLANE:
        return pose.copy()
    return Pose(frame_from_normal(spec.surface_normal), pose.position.copy())

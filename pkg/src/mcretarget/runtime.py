"""Live session loop: operator commands in, one retargeting step per
tick, tracking-model feedback, per-tick log records out.

The tracking model stands in for the downstream tracking controller:
perfect mode reports the desired state verbatim; spring-damper mode
deflects the measured joints under scheduled external wrenches and can
inject contact-measurement slips, which exercises the measured-state
feedback (anchor re-targeting and the desired-joint clamp).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .contacts import (
    DISABLED,
    ENABLED,
    PLANE,
    cop_of_wrench,
    expected_transition_ticks,
    friction_ratio,
)
from .geometry import Pose, clamp_vector, matrix_to_quat, quat_to_matrix, rotation_log, rotation_exp
from .kinematics import KinematicsCache
from .model import RobotModel
from .retarget import (
    RetargetEngine,
    RetargetState,
    StepError,
    TaskTargets,
    WeightSet,
    idle_targets_for,
    initialize_state,
)
from .statics import contact_anchor_from_pose, stacked_contact_jacobian


class CommandError(ValueError):
    """Rejected operator command."""


@dataclass
class CommandMessage:
    kind: str
    seq: int
    effector: str | None = None
    pose: Pose | None = None
    twist: np.ndarray | None = None
    normal_force: float = 0.0
    weight_override: float | None = None
    action: str | None = None
    weights: dict | None = None
    timestamp: float = 0.0

    KINDS = (
        "set_effector_target",
        "jog_effector",
        "set_force_target",
        "trigger_switch",
        "emergency_stop",
        "resume",
        "set_weights",
    )

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "seq": self.seq}
        if self.effector is not None:
            out["effector"] = self.effector
        if self.pose is not None:
            out["position"] = [float(v) for v in self.pose.position]
            out["orientation"] = [float(v) for v in matrix_to_quat(self.pose.rotation)]
        if self.twist is not None:
            out["twist"] = [float(v) for v in self.twist]
        if self.kind == "set_force_target":
            out["normal_force"] = float(self.normal_force)
            if self.weight_override is not None:
                out["weight_override"] = float(self.weight_override)
        if self.action is not None:
            out["action"] = self.action
        if self.weights is not None:
            out["weights"] = self.weights
        return out

    @staticmethod
    def from_dict(data: dict) -> "CommandMessage":
        kind = data.get("kind")
        if kind not in CommandMessage.KINDS:
            raise CommandError(f"unknown command kind '{kind}'")
        pose = None
        if "position" in data:
            quat = np.asarray(data.get("orientation", [1.0, 0.0, 0.0, 0.0]), dtype=float)
            pose = Pose(quat_to_matrix(quat / np.linalg.norm(quat)), np.asarray(data["position"], dtype=float))
        twist = np.asarray(data["twist"], dtype=float) if "twist" in data else None
        if twist is not None and twist.shape != (6,):
            raise CommandError("jog twist must have 6 components")
        return CommandMessage(
            kind=kind,
            seq=int(data.get("seq", 0)),
            effector=data.get("effector"),
            pose=pose,
            twist=twist,
            normal_force=float(data.get("normal_force", 0.0)),
            weight_override=(float(data["weight_override"]) if "weight_override" in data else None),
            action=data.get("action"),
            weights=data.get("weights"),
        )


@dataclass
class Disturbance:
    kind: str  # "wrench" | "joint_offset" | "slip"
    start_tick: int = 0
    end_tick: int = 1 << 62
    frame: str | None = None
    wrench: np.ndarray | None = None  # [torque; force], world, at the frame
    joint: str | None = None
    offset: float = 0.0
    slip: np.ndarray | None = None  # measured-pose position offset

    @staticmethod
    def from_dict(data: dict) -> "Disturbance":
        return Disturbance(
            kind=data["kind"],
            start_tick=int(data.get("start_tick", 0)),
            end_tick=int(data.get("end_tick", 1 << 62)),
            frame=data.get("frame"),
            wrench=np.asarray(data["wrench"], dtype=float) if "wrench" in data else None,
            joint=data.get("joint"),
            offset=float(data.get("offset", 0.0)),
            slip=np.asarray(data["slip"], dtype=float) if "slip" in data else None,
        )


PERFECT = "perfect"
SPRING_DAMPER = "spring-damper"


class TrackingModel:
    """Execution stub reporting the measured state of the robot.

    Spring-damper mode: each joint behaves as a spring of the given
    stiffness anchored at the desired position; scheduled external
    wrenches deflect it quasi-statically with a first-order response.
    """

    def __init__(self, mode: str = PERFECT, stiffness: float = 50.0, response: float = 0.02,
                 disturbances: list[Disturbance] | None = None):
        if mode not in (PERFECT, SPRING_DAMPER):
            raise ValueError(f"unknown tracking mode '{mode}'")
        self.mode = mode
        self.stiffness = stiffness
        self.response = response
        self._limits = None
        self.contact_poses: dict[str, Pose] = {}
        self.disturbances = disturbances if disturbances is not None else []
        self.measured_q = None
        self.measured_wrenches: dict[str, np.ndarray] = {}
        self.slips: dict[str, np.ndarray] = {}
        self._cache: KinematicsCache | None = None

    def advance(self, tick: int, model: RobotModel, state: RetargetState) -> None:
        for dist in self.disturbances:
            if dist.kind == "slip" and dist.start_tick == tick and dist.frame is not None:
                self.slips[dist.frame] = self.slips.get(dist.frame, np.zeros(3)) + dist.slip
        # constrained contacts are physically stuck in the world: their
        # measured poses are fixed at establishment, never tracking FK
        # (perfect mode skips this: it reports the desired state verbatim)
        if self.mode == SPRING_DAMPER:
            constrained = {e.name for e in state.contacts.constrained()}
            for name in list(self.contact_poses):
                if name not in constrained:
                    del self.contact_poses[name]
            for entry in state.contacts.constrained():
                if entry.name not in self.contact_poses:
                    self.contact_poses[entry.name] = entry.state.anchor.copy()
        if self.mode == PERFECT:
            # desired state verbatim; alias q so the step's cache is reused
            self.measured_q = state.q
            self._cache = state.cache
            self.measured_wrenches = {k: v.copy() for k, v in state.wrenches.items()}
            return
        desired = state.q
        if self.measured_q is None:
            self.measured_q = desired.copy()
        deflection = np.zeros(model.n)
        names = {j.name: j.dof for j in model.actuated_joints()}
        cache = None
        for dist in self.disturbances:
            if not (dist.start_tick <= tick < dist.end_tick):
                continue
            if dist.kind == "joint_offset" and dist.joint in names:
                deflection[names[dist.joint]] += dist.offset
            elif dist.kind == "wrench" and dist.frame is not None:
                from .kinematics import _resolve_frame

                if cache is None:
                    cache = KinematicsCache(model, self.measured_q)
                body, offset = _resolve_frame(model, dist.frame)
                pose = cache.frame_pose(body, offset)
                J = cache.jacobian(body, pose.position)
                gen = J[:3].T @ dist.wrench[:3] + J[3:].T @ dist.wrench[3:]
                deflection += gen[6:] / self.stiffness
        target = desired.joints + deflection
        joints = self.measured_q.joints + self.response * (target - self.measured_q.joints)
        if self._limits is None:
            self._limits = model.joint_limits()
        # real joints stop at their hard stops, the stub must too
        self.measured_q.joints = np.clip(joints, self._limits[0], self._limits[1])
        self.measured_q.base = desired.base.copy()
        self._cache = None
        self.measured_wrenches = {k: v.copy() for k, v in state.wrenches.items()}

    def measured_effector_pose(self, model: RobotModel, name: str) -> Pose:
        if name in self.contact_poses:
            pose = self.contact_poses[name]
        else:
            if self._cache is None or self._cache.q is not self.measured_q:
                self._cache = KinematicsCache(model, self.measured_q)
            pose = self._cache.effector_pose(name)
        if name in self.slips:
            pose = Pose(pose.rotation, pose.position + self.slips[name])
        return pose


@dataclass
class LogRecord:
    tick: int
    commanded: dict
    desired: dict
    measured: dict
    wrenches: dict
    wrenches_measured: dict
    contact_modes: dict
    anchors: dict
    switch_progress: dict
    cop: dict
    friction: dict
    saturations: list
    qp_iterations: int
    dx_norm: float
    equilibrium_residual: float
    kinematic_residuals: dict
    max_force_gauge: dict
    stopped: bool
    q: list
    tau: list
    max_joint_gap: float
    wall_time_ns: int
    step_time_ns: int
    events: list

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "commanded": self.commanded,
            "desired": self.desired,
            "measured": self.measured,
            "wrenches": self.wrenches,
            "wrenches_measured": self.wrenches_measured,
            "contact_modes": self.contact_modes,
            "anchors": self.anchors,
            "switch_progress": self.switch_progress,
            "cop": self.cop,
            "friction": self.friction,
            "saturations": self.saturations,
            "qp_iterations": self.qp_iterations,
            "dx_norm": self.dx_norm,
            "equilibrium_residual": self.equilibrium_residual,
            "kinematic_residuals": self.kinematic_residuals,
            "max_force_gauge": self.max_force_gauge,
            "stopped": self.stopped,
            "q": self.q,
            "tau": self.tau,
            "max_joint_gap": self.max_joint_gap,
            "wall_time_ns": self.wall_time_ns,
            "step_time_ns": self.step_time_ns,
            "events": self.events,
        }


def _pose_dict(pose: Pose) -> dict:
    return {
        "position": [float(v) for v in pose.position],
        "orientation": [float(v) for v in matrix_to_quat(pose.rotation)],
    }


class Session:
    """One teleoperated robot: command ingestion and the tick loop."""

    def __init__(
        self,
        model: RobotModel,
        weights: WeightSet | None = None,
        tracking: TrackingModel | None = None,
        tick_rate: float = 1000.0,
        probe_period: int = 50,
        feedback_cutoff_hz: float = 20.0,
        seed: int = 0,
    ):
        if tick_rate <= 0.0:
            raise ValueError("tick rate must be positive")
        self.model = model
        self.engine = RetargetEngine(model, weights)
        self.tracking = tracking if tracking is not None else TrackingModel()
        self.tick_rate = tick_rate
        self.probe_period = max(1, int(probe_period))
        self.seed = seed
        # first-order low-pass gain for measured contact poses
        dt = 1.0 / tick_rate
        self.anchor_gain = 1.0 - np.exp(-2.0 * np.pi * feedback_cutoff_hz * dt)
        self.state, self.targets = initialize_state(self.engine)
        self.commanded_poses = {k: v.copy() for k, v in self.targets.effector_poses.items()}
        self.tracking.advance(0, model, self.state)
        self.tick_index = 0
        self.last_seq = 0
        self.stopped = False
        self.live = True
        self._pending: list[CommandMessage] = []
        self._gauge: dict[str, float] = {}
        self._events: list[str] = []
        self._transition_cache: tuple | None = None

    def _transition_ticks(self) -> int:
        w = self.engine.weights
        key = (w.alpha, w.contact_enabled, w.contact_disabled)
        if self._transition_cache is None or self._transition_cache[0] != key:
            self._transition_cache = (key, expected_transition_ticks(*key))
        return self._transition_cache[1]

    # -- command ingestion ---------------------------------------------------

    def ingest(self, msg: CommandMessage) -> None:
        """Validate and queue a command; applied atomically at tick start."""
        if not self.live:
            raise CommandError("session is not live")
        if msg.seq <= self.last_seq:
            raise CommandError(f"stale sequence number {msg.seq} (last {self.last_seq})")
        if msg.kind not in CommandMessage.KINDS:
            raise CommandError(f"unknown command kind '{msg.kind}'")
        if msg.kind in ("set_effector_target", "jog_effector", "set_force_target", "trigger_switch"):
            if not msg.effector or not self.model.has_effector(msg.effector):
                raise CommandError(f"unknown effector '{msg.effector}'")
        if msg.kind in ("set_effector_target", "jog_effector"):
            if msg.effector in self.state.contacts and self.state.contacts.entry(msg.effector).constrained:
                raise CommandError(f"effector '{msg.effector}' is in contact, pose commands need a removal first")
        if msg.kind == "set_force_target":
            entry = self.state.contacts.entry(msg.effector) if msg.effector in self.state.contacts else None
            if entry is None or entry.state.mode != ENABLED:
                raise CommandError(f"force targets need an enabled contact, '{msg.effector}' is not")
        if msg.kind == "trigger_switch":
            if msg.action not in ("add", "remove"):
                raise CommandError(f"switch action must be add or remove, got '{msg.action}'")
            if msg.effector not in self.state.contacts:
                raise CommandError(f"effector '{msg.effector}' has no contact specification")
            entry = self.state.contacts.entry(msg.effector)
            if entry.state.mode in ("removing", "adding"):
                raise CommandError(f"contact '{msg.effector}' is already in transition")
            if msg.action == "remove" and entry.state.mode != ENABLED:
                raise CommandError(f"cannot remove contact '{msg.effector}' in mode '{entry.state.mode}'")
            if msg.action == "add" and entry.state.mode != DISABLED:
                raise CommandError(f"cannot add contact '{msg.effector}' in mode '{entry.state.mode}'")
        if msg.kind == "set_weights":
            probe = WeightSet()
            for key, value in (msg.weights or {}).items():
                if not hasattr(probe, key):
                    raise CommandError(f"unknown weight '{key}'")
                setattr(probe, key, np.asarray(value, dtype=float) if isinstance(value, list) else float(value))
            probe.validate()
        self.last_seq = msg.seq
        self._pending.append(msg)

    def _apply(self, msg: CommandMessage) -> None:
        targets = self.targets
        if msg.kind == "set_effector_target":
            self.commanded_poses[msg.effector] = msg.pose.copy()
            targets.effector_poses[msg.effector] = msg.pose.copy()
        elif msg.kind == "jog_effector":
            current = self.commanded_poses.get(msg.effector)
            if current is None:
                cache = self.state.ensure_cache(self.model)
                eff = self.model.effector(msg.effector)
                current = cache.frame_pose(eff.body, eff.offset)
            moved = Pose(
                rotation_exp(msg.twist[:3]) @ current.rotation,
                current.position + msg.twist[3:],
            )
            self.commanded_poses[msg.effector] = moved
            targets.effector_poses[msg.effector] = moved.copy()
        elif msg.kind == "set_force_target":
            entry = self.state.contacts.entry(msg.effector)
            wrench = np.zeros(entry.spec.dim)
            wrench[-1] = msg.normal_force
            targets.wrench_targets[msg.effector] = wrench
            if msg.weight_override is not None:
                targets.weight_overrides[msg.effector] = msg.weight_override
        elif msg.kind == "trigger_switch":
            entry = self.state.contacts.entry(msg.effector)
            if msg.action == "remove":
                entry.start_remove(self.engine.weights.contact_enabled)
                targets.wrench_targets.pop(msg.effector, None)
                targets.weight_overrides.pop(msg.effector, None)
                self._events.append(f"switch-remove:{msg.effector}")
            else:
                measured_pose = self.tracking.measured_effector_pose(self.model, msg.effector)
                anchor = contact_anchor_from_pose(entry.spec, measured_pose)
                entry.start_add(anchor, self.engine.weights.contact_disabled)
                self.state.wrenches[msg.effector] = np.zeros(entry.spec.dim)
                targets.effector_poses.pop(msg.effector, None)
                self.commanded_poses.pop(msg.effector, None)
                self._events.append(f"switch-add:{msg.effector}")
        elif msg.kind == "emergency_stop":
            self.stopped = True
            self.targets = self.engine.hold_targets(self.state)
            self.commanded_poses = {k: v.copy() for k, v in self.targets.effector_poses.items()}
            self._events.append("emergency-stop")
        elif msg.kind == "resume":
            self.stopped = False
            self.targets = idle_targets_for(self.engine, self.state)
            self.commanded_poses = {k: v.copy() for k, v in self.targets.effector_poses.items()}
            self._events.append("resume")
        elif msg.kind == "set_weights":
            for key, value in (msg.weights or {}).items():
                setattr(
                    self.engine.weights,
                    key,
                    np.asarray(value, dtype=float) if isinstance(value, list) else float(value),
                )
            self.engine.weights.validate()

    # -- feedback ------------------------------------------------------------

    def apply_measured_feedback(self) -> None:
        """Overwrite contact anchors with filtered measured poses, then
        clamp the desired joints into a band around the measured ones."""
        measured_q = self.tracking.measured_q
        if measured_q is None:
            return
        gain = self.anchor_gain
        for entry in self.state.contacts.constrained():
            measured_pose = self.tracking.measured_effector_pose(self.model, entry.name)
            target = contact_anchor_from_pose(entry.spec, measured_pose)
            anchor = entry.state.anchor
            delta_p = target.position - anchor.position
            delta_r = rotation_log(target.rotation @ anchor.rotation.T)
            if float(delta_p @ delta_p) < 1e-24 and float(delta_r @ delta_r) < 1e-24:
                continue
            entry.state.anchor = Pose(
                rotation_exp(gain * delta_r) @ anchor.rotation,
                anchor.position + gain * delta_p,
            )
        gap = self.state.q.joints - measured_q.joints
        clamped = measured_q.joints + clamp_vector(gap, self.engine.weights.clamp_joint)
        # the band is centered on the measured joints; keep the desired
        # inside the model's position limits no matter where those sit
        low, high = self.model.joint_limits()
        clamped = np.clip(clamped, low, high)
        if not np.array_equal(clamped, self.state.q.joints):
            q = self.state.q.copy()
            q.joints = clamped
            self.state.q = q
            self.state.invalidate_cache()

    # -- probing -------------------------------------------------------------

    def max_feasible_normal_force(self, contact: str) -> float:
        """Largest normal force the contact could carry at the frozen
        posture: an LP over the wrench increments only."""
        entry = self.state.contacts.entry(contact)
        if entry.state.mode != ENABLED:
            raise CommandError(f"contact '{contact}' is not enabled")
        state = self.state
        cache = state.ensure_cache(self.model)
        entries = state.contacts.constrained()
        dims, offset = {}, 0
        for e in entries:
            dims[e.name] = (offset, e.spec.dim)
            offset += e.spec.dim
        l = offset
        Jhat = stacked_contact_jacobian(cache, state.contacts)
        A_base, b_rows = self.engine._equilibrium_rows(cache, state)
        nv = self.model.nv
        # base rows at dq = 0:  -J_B^T dlam + b = 0
        A_eq = A_base[:6, nv:]
        b_eq = -b_rows[:6]
        T_lam = A_base[6:, nv:]
        t = b_rows[6:]
        tau_max = self.model.effort_limits()
        A_ub, b_ub = [], []
        A_ub.append(T_lam)
        b_ub.append(tau_max - t)
        A_ub.append(-T_lam)
        b_ub.append(tau_max + t)
        for e in entries:
            M, b0, _ = e.inequality_rows()
            row = np.zeros((M.shape[0], l))
            off, dim_i = dims[e.name]
            row[:, off : off + dim_i] = -M
            A_ub.append(row)
            b_ub.append(M @ state.wrenches[e.name] + b0)
        c = np.zeros(l)
        off, dim_i = dims[contact]
        c[off + dim_i - 1] = -1.0  # maximize the normal (last) component
        result = linprog(
            c,
            A_ub=np.vstack(A_ub),
            b_ub=np.concatenate(b_ub),
            A_eq=A_eq,
            b_eq=b_eq,
            bounds=[(None, None)] * l,
            method="highs",
        )
        if not result.success:
            raise CommandError(f"max-force probe infeasible for '{contact}': {result.message}")
        return float(state.wrenches[contact][-1] + result.x[off + dim_i - 1])

    # -- the tick ------------------------------------------------------------

    def tick(self) -> LogRecord:
        if not self.live:
            raise RuntimeError("session is not live")
        t0 = time.perf_counter_ns()
        self.tick_index += 1
        self._events = []
        for msg in self._pending:
            self._apply(msg)
        self._pending.clear()
        events = self._events
        if self.tracking.mode == SPRING_DAMPER:
            # sensors sample at tick start; the desired state then reacts
            self.tracking.advance(self.tick_index, self.model, self.state)

        switch_progress = {}
        weights = self.engine.weights
        for entry in list(self.state.contacts):
            if entry.state.mode in ("removing", "adding"):
                norm = float(np.linalg.norm(self.state.wrenches.get(entry.name, np.zeros(1))))
                event = entry.switching_step(
                    weights.alpha, weights.contact_enabled, weights.contact_disabled, norm
                )
                if event == "removed":
                    self.state.wrenches.pop(entry.name, None)
                    pose = self.state.ensure_cache(self.model).effector_pose(entry.name)
                    self.targets.effector_poses[entry.name] = pose.copy()
                    self.commanded_poses[entry.name] = pose.copy()
                    events.append(f"removed:{entry.name}")
                elif event == "added":
                    events.append(f"added:{entry.name}")
                elif event == "removal_failed":
                    events.append(f"removal-failed:{entry.name}")
                switch_progress[entry.name] = min(
                    1.0, entry.state.ticks_in_transition / self._transition_ticks()
                )

        self.apply_measured_feedback()
        if self.tracking.measured_q is not None:
            joint_gap = float(
                np.max(np.abs(self.state.q.joints - self.tracking.measured_q.joints))
            ) if self.model.n else 0.0
        else:
            joint_gap = 0.0

        if self.stopped:
            report = None
            step_ns = 0
        else:
            step_t0 = time.perf_counter_ns()
            try:
                self.state, report = self.engine.step(self.state, self.targets, in_place=True)
            except StepError:
                self.live = False
                raise
            step_ns = time.perf_counter_ns() - step_t0
        if self.tracking.mode != SPRING_DAMPER:
            # perfect tracking reports the fresh desired state verbatim
            self.tracking.advance(self.tick_index, self.model, self.state)

        if self.tick_index % self.probe_period == 0:
            for e in self.state.contacts.constrained():
                if e.state.mode == ENABLED:
                    try:
                        self._gauge[e.name] = self.max_feasible_normal_force(e.name)
                    except CommandError:
                        self._gauge.pop(e.name, None)

        cache = self.state.ensure_cache(self.model)
        desired_poses, measured_poses = {}, {}
        for eff in self.model.end_effectors:
            desired_poses[eff.name] = _pose_dict(cache.frame_pose(eff.body, eff.offset))
            measured_poses[eff.name] = _pose_dict(
                self.tracking.measured_effector_pose(self.model, eff.name)
            )
        cop, friction, modes, anchors = {}, {}, {}, {}
        for entry in self.state.contacts:
            modes[entry.name] = entry.state.mode
            if entry.constrained:
                anchors[entry.name] = _pose_dict(entry.state.anchor)
                wrench = self.state.wrenches[entry.name]
                fz = wrench[-1]
                if fz > 1e-9:
                    friction[entry.name] = friction_ratio(wrench)
                    if entry.spec.kind == PLANE:
                        cop[entry.name] = list(cop_of_wrench(wrench))
        if report is not None:
            eq_res = report.equilibrium_residual
            kin = {k: list(v) for k, v in report.kinematic_residuals.items()}
            saturations = ["{}:{}".format(*s) for s in report.saturations]
            qp_iters, dx = report.qp_iterations, report.dx_norm
        else:
            eq_res, kin_pairs = self.engine.evaluate_residuals(self.state)
            kin = {k: list(v) for k, v in kin_pairs.items()}
            saturations = []
            qp_iters, dx = 0, 0.0
        record = LogRecord(
            tick=self.tick_index,
            commanded={k: _pose_dict(v) for k, v in self.commanded_poses.items()},
            desired=desired_poses,
            measured=measured_poses,
            wrenches={k: [float(x) for x in v] for k, v in self.state.wrenches.items()},
            wrenches_measured={
                k: [float(x) for x in v] for k, v in self.tracking.measured_wrenches.items()
            },
            contact_modes=modes,
            anchors=anchors,
            switch_progress=switch_progress,
            cop=cop,
            friction=friction,
            saturations=saturations,
            qp_iterations=qp_iters,
            dx_norm=float(dx),
            equilibrium_residual=float(eq_res),
            kinematic_residuals=kin,
            max_force_gauge=dict(self._gauge),
            stopped=self.stopped,
            q=[float(v) for v in np.concatenate([self.state.q.base.quaternion, self.state.q.base.position, self.state.q.joints])],
            tau=[float(v) for v in self.state.tau],
            max_joint_gap=joint_gap,
            wall_time_ns=time.perf_counter_ns() - t0,
            step_time_ns=step_ns,
            events=events,
        )
        return record

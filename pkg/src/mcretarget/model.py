"""Robot model: rigid-body tree, joint metadata, end-effector frames.

Models are loaded from a strict URDF subset: links carry only inertial
data, joints are revolute/prismatic/fixed with explicit limits, and a
vendor <end_effector> element tags frames with contact geometry.  Any
element or attribute outside the subset is a hard parse error.  The
single root link is the floating base; generalized positions stack the
6-DoF base pose with the actuated joint vector in document order.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from .contacts import ContactSpec
from .geometry import Pose, normalize_quat, quat_to_matrix

GRAVITY = 9.81

REVOLUTE = "revolute"
PRISMATIC = "prismatic"
FIXED = "fixed"


class ModelError(ValueError):
    """Raised for malformed or out-of-subset model documents."""


@dataclass
class Body:
    name: str
    index: int
    mass: float = 0.0
    com: np.ndarray = field(default_factory=lambda: np.zeros(3))
    inertia: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    parent_joint: int | None = None  # index into RobotModel.joints, None for root


@dataclass
class Joint:
    name: str
    index: int
    jtype: str
    parent: int
    child: int
    origin: Pose
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    lower: float = 0.0
    upper: float = 0.0
    velocity_limit: float = 0.0
    effort_limit: float = 0.0
    dof: int | None = None  # actuated-joint index into theta, None when fixed


@dataclass
class EndEffector:
    name: str
    body: int
    offset: Pose
    contact: ContactSpec | None = None


@dataclass
class BasePose:
    """Floating-base pose: unit quaternion (world<-base) and world position."""

    quaternion: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.quaternion)

    def pose(self) -> Pose:
        return Pose(self.rotation(), self.position)

    def copy(self) -> "BasePose":
        return BasePose(self.quaternion.copy(), self.position.copy())


@dataclass
class GeneralizedPosition:
    """Base pose plus actuated joint positions; tangent dimension 6 + n."""

    base: BasePose
    joints: np.ndarray

    def copy(self) -> "GeneralizedPosition":
        return GeneralizedPosition(self.base.copy(), self.joints.copy())


class RobotModel:
    """Validated kinematic tree with one floating-base root."""

    def __init__(self, name, bodies, joints, end_effectors):
        self.name: str = name
        self.bodies: list[Body] = bodies
        self.joints: list[Joint] = joints
        self.end_effectors: list[EndEffector] = end_effectors
        self.nominal_posture: np.ndarray = np.zeros(self.n)
        self._body_index = {b.name: b.index for b in bodies}
        self._effector_index = {e.name: i for i, e in enumerate(end_effectors)}
        self._validate()

    @property
    def n(self) -> int:
        return sum(1 for j in self.joints if j.dof is not None)

    @property
    def nv(self) -> int:
        """Tangent-space dimension: 6 base + n joints."""
        return 6 + self.n

    @property
    def root(self) -> int:
        return self._root

    @property
    def total_mass(self) -> float:
        return sum(b.mass for b in self.bodies)

    def body(self, name: str) -> Body:
        try:
            return self.bodies[self._body_index[name]]
        except KeyError:
            raise ModelError(f"unknown body '{name}'") from None

    def effector(self, name: str) -> EndEffector:
        try:
            return self.end_effectors[self._effector_index[name]]
        except KeyError:
            raise ModelError(f"unknown end-effector '{name}'") from None

    def has_effector(self, name: str) -> bool:
        return name in self._effector_index

    def actuated_joints(self) -> list[Joint]:
        return [j for j in self.joints if j.dof is not None]

    def joint_limits(self) -> tuple[np.ndarray, np.ndarray]:
        act = self.actuated_joints()
        return (np.array([j.lower for j in act]), np.array([j.upper for j in act]))

    def effort_limits(self) -> np.ndarray:
        return np.array([j.effort_limit for j in self.actuated_joints()])

    def neutral_position(self) -> GeneralizedPosition:
        return GeneralizedPosition(BasePose(), self.nominal_posture.copy())

    def _validate(self) -> None:
        roots = [b.index for b in self.bodies if b.parent_joint is None]
        if len(roots) != 1:
            raise ModelError(f"model must have exactly one root link, found {len(roots)}")
        self._root = roots[0]
        # reachability from the root doubles as loop/disconnection detection
        children: dict[int, list[int]] = {b.index: [] for b in self.bodies}
        for j in self.joints:
            children[j.parent].append(j.child)
        order, stack, seen = [], [self._root], set()
        while stack:
            b = stack.pop()
            if b in seen:
                raise ModelError(f"kinematic loop through body '{self.bodies[b].name}'")
            seen.add(b)
            order.append(b)
            stack.extend(reversed(children[b]))
        if len(seen) != len(self.bodies):
            missing = [b.name for b in self.bodies if b.index not in seen]
            raise ModelError(f"bodies not connected to the root (loop or orphan): {missing}")
        self.topological_order = order
        for b in self.bodies:
            if b.mass < 0.0:
                raise ModelError(f"body '{b.name}' has negative mass")
        for j in self.joints:
            if j.dof is not None:
                if j.lower > j.upper:
                    raise ModelError(f"joint '{j.name}' has empty position limit interval")
                if abs(np.linalg.norm(j.axis) - 1.0) > 1e-9:
                    raise ModelError(f"joint '{j.name}' axis is not unit-norm")
        for e in self.end_effectors:
            if e.body < 0 or e.body >= len(self.bodies):
                raise ModelError(f"end-effector '{e.name}' attached to unknown body")


_LINK_CHILDREN = {"inertial"}
_INERTIAL_CHILDREN = {"origin", "mass", "inertia"}
_JOINT_CHILDREN = {"origin", "parent", "child", "axis", "limit"}
_JOINT_TYPES = {REVOLUTE, PRISMATIC, FIXED}
_EE_CHILDREN = {"origin", "contact"}
_CONTACT_ATTRS = {
    "kind",
    "half_length_x",
    "half_length_y",
    "friction",
    "min_normal",
    "max_normal",
    "surface_normal",
    "initial",
}


def _floats(text: str, count: int, ctx: str) -> np.ndarray:
    parts = text.split()
    if len(parts) != count:
        raise ModelError(f"{ctx}: expected {count} numbers, got '{text}'")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ModelError(f"{ctx}: non-numeric value in '{text}'") from None


def _origin(elem: ET.Element | None, ctx: str) -> Pose:
    if elem is None:
        return Pose.identity()
    xyz = _floats(elem.get("xyz", "0 0 0"), 3, ctx)
    rpy = _floats(elem.get("rpy", "0 0 0"), 3, ctx)
    return Pose.from_rpy(xyz, rpy)


def load_model(text: str) -> RobotModel:
    """Parse a model document (URDF subset) into a RobotModel."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ModelError(f"XML syntax error at line {exc.position[0]}: {exc.msg}") from None
    if root.tag != "robot":
        raise ModelError(f"expected <robot> root element, found <{root.tag}>")

    bodies: list[Body] = []
    body_index: dict[str, int] = {}
    joints: list[Joint] = []
    effectors: list[EndEffector] = []
    posture_elem: ET.Element | None = None

    for elem in root:
        if elem.tag == "link":
            name = elem.get("name")
            if not name:
                raise ModelError("link without a name")
            if name in body_index:
                raise ModelError(f"duplicate link '{name}'")
            body = Body(name=name, index=len(bodies))
            for child in elem:
                if child.tag not in _LINK_CHILDREN:
                    raise ModelError(f"link '{name}': unsupported element <{child.tag}>")
            inertial = elem.find("inertial")
            if inertial is not None:
                for child in inertial:
                    if child.tag not in _INERTIAL_CHILDREN:
                        raise ModelError(f"link '{name}': unsupported inertial element <{child.tag}>")
                mass_elem = inertial.find("mass")
                if mass_elem is not None:
                    body.mass = float(mass_elem.get("value", "0"))
                body.com = _origin(inertial.find("origin"), f"link '{name}' inertial origin").position
                inertia = inertial.find("inertia")
                if inertia is not None:
                    ixx = float(inertia.get("ixx", "0"))
                    iyy = float(inertia.get("iyy", "0"))
                    izz = float(inertia.get("izz", "0"))
                    ixy = float(inertia.get("ixy", "0"))
                    ixz = float(inertia.get("ixz", "0"))
                    iyz = float(inertia.get("iyz", "0"))
                    body.inertia = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
            body_index[name] = body.index
            bodies.append(body)
        elif elem.tag == "joint":
            joints.append(elem)  # resolved after all links are known
        elif elem.tag == "end_effector":
            effectors.append(elem)
        elif elem.tag == "nominal_posture":
            posture_elem = elem
        else:
            raise ModelError(f"unsupported element <{elem.tag}> under <robot>")

    resolved_joints: list[Joint] = []
    dof = 0
    for elem in joints:
        name = elem.get("name")
        jtype = elem.get("type")
        if not name:
            raise ModelError("joint without a name")
        if jtype not in _JOINT_TYPES:
            raise ModelError(f"joint '{name}': unsupported type '{jtype}'")
        for child in elem:
            if child.tag not in _JOINT_CHILDREN:
                raise ModelError(f"joint '{name}': unsupported element <{child.tag}>")
        parent_elem, child_elem = elem.find("parent"), elem.find("child")
        if parent_elem is None or child_elem is None:
            raise ModelError(f"joint '{name}': missing parent or child link")
        for link_name in (parent_elem.get("link"), child_elem.get("link")):
            if link_name not in body_index:
                raise ModelError(f"joint '{name}': unknown link '{link_name}'")
        parent = body_index[parent_elem.get("link")]
        child = body_index[child_elem.get("link")]
        joint = Joint(
            name=name,
            index=len(resolved_joints),
            jtype=jtype,
            parent=parent,
            child=child,
            origin=_origin(elem.find("origin"), f"joint '{name}' origin"),
        )
        if jtype != FIXED:
            axis_elem = elem.find("axis")
            axis = _floats(axis_elem.get("xyz"), 3, f"joint '{name}' axis") if axis_elem is not None else np.array([0.0, 0.0, 1.0])
            norm = float(np.linalg.norm(axis))
            if abs(norm - 1.0) > 1e-3:
                raise ModelError(f"joint '{name}': axis {axis.tolist()} is not unit-norm")
            joint.axis = axis / norm
            limit = elem.find("limit")
            if limit is None:
                raise ModelError(f"joint '{name}': actuated joint is missing <limit>")
            for attr in ("lower", "upper", "effort", "velocity"):
                if limit.get(attr) is None:
                    raise ModelError(f"joint '{name}': <limit> is missing '{attr}'")
            joint.lower = float(limit.get("lower"))
            joint.upper = float(limit.get("upper"))
            joint.effort_limit = float(limit.get("effort"))
            joint.velocity_limit = float(limit.get("velocity"))
            joint.dof = dof
            dof += 1
        if bodies[child].parent_joint is not None:
            raise ModelError(f"link '{bodies[child].name}' has more than one parent joint")
        bodies[child].parent_joint = joint.index
        resolved_joints.append(joint)

    total_mass = sum(b.mass for b in bodies)
    resolved_effectors: list[EndEffector] = []
    seen_names: set[str] = set()
    for elem in effectors:
        name = elem.get("name")
        link = elem.get("link")
        if not name or name in seen_names:
            raise ModelError(f"end-effector missing name or duplicated: '{name}'")
        seen_names.add(name)
        if link not in body_index:
            raise ModelError(f"end-effector '{name}': unknown link '{link}'")
        for child in elem:
            if child.tag not in _EE_CHILDREN:
                raise ModelError(f"end-effector '{name}': unsupported element <{child.tag}>")
        contact = None
        celem = elem.find("contact")
        if celem is not None:
            for attr in celem.keys():
                if attr not in _CONTACT_ATTRS:
                    raise ModelError(f"end-effector '{name}': unsupported contact attribute '{attr}'")
            kind = celem.get("kind")
            if kind not in ("plane", "point"):
                raise ModelError(f"end-effector '{name}': contact kind must be plane or point")
            normal = _floats(celem.get("surface_normal", "0 0 1"), 3, f"end-effector '{name}' surface_normal")
            nn = float(np.linalg.norm(normal))
            if nn < 1e-9:
                raise ModelError(f"end-effector '{name}': zero surface normal")
            contact = ContactSpec(
                effector=name,
                kind=kind,
                half_length_x=float(celem.get("half_length_x", "0")),
                half_length_y=float(celem.get("half_length_y", "0")),
                friction=float(celem.get("friction", "0.5")),
                min_normal=float(celem.get("min_normal", "0")),
                max_normal=float(celem.get("max_normal", str(10.0 * total_mass * GRAVITY))),
                surface_normal=normal / nn,
                initial_enabled=celem.get("initial", "disabled") == "enabled",
            )
            contact.validate()
        resolved_effectors.append(
            EndEffector(
                name=name,
                body=body_index[link],
                offset=_origin(elem.find("origin"), f"end-effector '{name}' origin"),
                contact=contact,
            )
        )

    model = RobotModel(root.get("name", "robot"), bodies, resolved_joints, resolved_effectors)

    if posture_elem is not None:
        posture = np.zeros(model.n)
        names = {j.name: j.dof for j in model.actuated_joints()}
        for child in posture_elem:
            if child.tag != "joint":
                raise ModelError(f"nominal_posture: unsupported element <{child.tag}>")
            jname = child.get("name")
            if jname not in names:
                raise ModelError(f"nominal_posture: unknown actuated joint '{jname}'")
            posture[names[jname]] = float(child.get("value", "0"))
        model.nominal_posture = posture

    return model


def load_model_file(path) -> RobotModel:
    with open(path, "r", encoding="utf-8") as handle:
        return load_model(handle.read())

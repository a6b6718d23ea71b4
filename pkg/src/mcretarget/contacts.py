"""Contact specifications, stability inequalities, metrics, switching.

Wrenches live in the contact's local (anchor) frame.  Plane contacts
carry a 6-vector (tau_x, tau_y, tau_z, f_x, f_y, f_z); point contacts a
3-vector (f_x, f_y, f_z).  f_z is the normal component: the local z
axis is the outward surface normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose

PLANE = "plane"
POINT = "point"

DISABLED = "disabled"
ENABLED = "enabled"
REMOVING = "removing"
ADDING = "adding"

# removal succeeds only once the residual wrench is numerically zero
EPSILON_FORCE = 1e-3

PLANE_WRENCH_DIM = 6
POINT_WRENCH_DIM = 3


@dataclass
class ContactSpec:
    effector: str
    kind: str
    half_length_x: float = 0.0
    half_length_y: float = 0.0
    friction: float = 0.5
    min_normal: float = 0.0
    max_normal: float = 1e4
    surface_normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    initial_enabled: bool = False

    @property
    def dim(self) -> int:
        return PLANE_WRENCH_DIM if self.kind == PLANE else POINT_WRENCH_DIM

    def validate(self) -> None:
        if self.kind not in (PLANE, POINT):
            raise ValueError(f"contact '{self.effector}': unknown kind '{self.kind}'")
        if self.friction <= 0.0:
            raise ValueError(f"contact '{self.effector}': friction must be positive")
        if not (0.0 <= self.min_normal < self.max_normal):
            raise ValueError(f"contact '{self.effector}': need 0 <= min_normal < max_normal")
        if self.kind == PLANE and (self.half_length_x <= 0.0 or self.half_length_y <= 0.0):
            raise ValueError(f"contact '{self.effector}': plane half-lengths must be positive")


def build_contact_inequalities(spec: ContactSpec, min_normal: float | None = None):
    """Linear stability rows A w + b >= 0 over the local wrench w.

    Plane contacts produce 18 rows: normal bounds, friction pyramid,
    CoP rectangle, and 8 coupled yaw-torque rows; point contacts the 6
    normal/friction rows.  Returns (A, b, labels) with one
    (category, detail) label per row.
    """
    mu = spec.friction
    f_min = spec.min_normal if min_normal is None else min_normal
    f_max = spec.max_normal
    rows, offs, labels = [], [], []

    if spec.kind == POINT:
        fx, fy, fz = np.eye(3)
        rows += [fz, -fz]
        offs += [-f_min, f_max]
        labels += [("normal-min", spec.effector), ("normal-max", spec.effector)]
        for sign, tag in ((-1.0, "+x"), (1.0, "-x")):
            rows.append(sign * fx + mu * fz)
            offs.append(0.0)
            labels.append(("friction", f"{spec.effector}{tag}"))
        for sign, tag in ((-1.0, "+y"), (1.0, "-y")):
            rows.append(sign * fy + mu * fz)
            offs.append(0.0)
            labels.append(("friction", f"{spec.effector}{tag}"))
        return np.array(rows), np.array(offs), labels

    tx, ty, tz, fx, fy, fz = np.eye(6)
    lx, ly = spec.half_length_x, spec.half_length_y
    rows += [fz, -fz]
    offs += [-f_min, f_max]
    labels += [("normal-min", spec.effector), ("normal-max", spec.effector)]
    for sign, tag in ((-1.0, "+x"), (1.0, "-x")):
        rows.append(sign * fx + mu * fz)
        offs.append(0.0)
        labels.append(("friction", f"{spec.effector}{tag}"))
    for sign, tag in ((-1.0, "+y"), (1.0, "-y")):
        rows.append(sign * fy + mu * fz)
        offs.append(0.0)
        labels.append(("friction", f"{spec.effector}{tag}"))
    for sign, tag in ((-1.0, "+x"), (1.0, "-x")):
        rows.append(sign * tx + ly * fz)
        offs.append(0.0)
        labels.append(("cop", f"{spec.effector}{tag}"))
    for sign, tag in ((-1.0, "+y"), (1.0, "-y")):
        rows.append(sign * ty + lx * fz)
        offs.append(0.0)
        labels.append(("cop", f"{spec.effector}{tag}"))
    # coupled yaw-torque rows:
    #   +tz <= mu (lx+ly) fz - |ly fx - mu tx| - |lx fy - mu ty|
    #   -tz <= mu (lx+ly) fz - |ly fx + mu tx| - |lx fy + mu ty|
    # expanded over the absolute-value sign choices s1, s2.
    span = mu * (lx + ly)
    k = 0
    for tz_sign in (1.0, -1.0):
        for s1 in (1.0, -1.0):
            for s2 in (1.0, -1.0):
                row = span * fz - tz_sign * tz
                row -= s1 * (ly * fx - tz_sign * mu * tx)
                row -= s2 * (lx * fy - tz_sign * mu * ty)
                rows.append(row)
                offs.append(0.0)
                labels.append(("yaw", f"{spec.effector}#{k}"))
                k += 1
    return np.array(rows), np.array(offs), labels


def cop_of_wrench(wrench: np.ndarray) -> tuple[float, float]:
    """Center of pressure (CoP_x, CoP_y) of a plane-contact wrench."""
    w = np.asarray(wrench, dtype=float)
    if w.shape != (6,):
        raise ValueError("plane wrench must have 6 components")
    fz = w[5]
    if fz <= 0.0:
        raise ValueError(f"center of pressure undefined for fz={fz}")
    return abs(w[1]) / fz, abs(w[0]) / fz


def friction_ratio(wrench: np.ndarray) -> float:
    """Tangential-to-normal ratio max(|fx|, |fy|)/fz; stable below mu."""
    w = np.asarray(wrench, dtype=float)
    force = w if w.shape == (3,) else w[3:]
    fz = force[2]
    if fz <= 0.0:
        raise ValueError(f"friction ratio undefined for fz={fz}")
    return max(abs(force[0]), abs(force[1])) / fz


@dataclass
class ContactState:
    mode: str = DISABLED
    weight: float = 1.0
    anchor: Pose | None = None
    ticks_in_transition: int = 0

    def copy(self) -> "ContactState":
        return ContactState(
            self.mode,
            self.weight,
            self.anchor.copy() if self.anchor is not None else None,
            self.ticks_in_transition,
        )


class ContactEntry:
    """One end-effector's contact spec plus its switching state."""

    def __init__(self, spec: ContactSpec, state: ContactState | None = None):
        self.spec = spec
        self.state = state if state is not None else ContactState()
        self._rows_cache: dict[float, tuple] = {}

    @property
    def name(self) -> str:
        return self.spec.effector

    @property
    def constrained(self) -> bool:
        """Kinematically fixed and carrying a wrench (enabled or in transition)."""
        return self.state.mode != DISABLED

    def effective_min_normal(self) -> float:
        # transitions must let the force reach zero; f_min applies when enabled
        return self.spec.min_normal if self.state.mode == ENABLED else 0.0

    def inequality_rows(self):
        if not self.constrained:
            raise ValueError(f"contact '{self.name}' is disabled, no stability rows")
        f_min = self.effective_min_normal()
        rows = self._rows_cache.get(f_min)
        if rows is None:
            rows = build_contact_inequalities(self.spec, f_min)
            self._rows_cache[f_min] = rows
        return rows

    def start_remove(self, w_enabled: float) -> None:
        if self.state.mode != ENABLED:
            raise ValueError(f"cannot remove contact '{self.name}' in mode '{self.state.mode}'")
        self.state.mode = REMOVING
        self.state.weight = w_enabled
        self.state.ticks_in_transition = 0

    def start_add(self, anchor: Pose, w_disabled: float) -> None:
        if self.state.mode != DISABLED:
            raise ValueError(f"cannot add contact '{self.name}' in mode '{self.state.mode}'")
        self.state.mode = ADDING
        self.state.weight = w_disabled
        self.state.anchor = anchor.copy()
        self.state.ticks_in_transition = 0

    def force_enable(self, anchor: Pose, w_enabled: float) -> None:
        """Immediately enable at the given anchor (initial stance setup)."""
        self.state.mode = ENABLED
        self.state.weight = w_enabled
        self.state.anchor = anchor.copy()
        self.state.ticks_in_transition = 0

    def switching_step(self, alpha, w_enabled, w_disabled, wrench_norm, eps_force=EPSILON_FORCE) -> str:
        """Advance the transition weight by one tick.

        Removal: weight *= alpha until w_disabled, then succeeds only if
        the residual wrench is below eps_force; otherwise the weight
        decays back (mode flips to adding, which terminates at enabled).
        Addition: weight /= alpha until w_enabled.
        """
        state = self.state
        if state.mode == REMOVING:
            state.ticks_in_transition += 1
            state.weight = min(state.weight * alpha, w_disabled)
            if state.weight >= w_disabled:
                if wrench_norm < eps_force:
                    state.mode = DISABLED
                    state.weight = w_disabled
                    state.anchor = None
                    return "removed"
                state.mode = ADDING  # decay back toward enabled
                state.ticks_in_transition = 0
                return "removal_failed"
            return "in_progress"
        if state.mode == ADDING:
            state.ticks_in_transition += 1
            state.weight = max(state.weight / alpha, w_enabled)
            if state.weight <= w_enabled:
                state.mode = ENABLED
                state.weight = w_enabled
                state.ticks_in_transition = 0
                return "added"
            return "in_progress"
        raise ValueError(f"contact '{self.name}' is not in transition (mode '{state.mode}')")


def expected_transition_ticks(alpha: float, w_enabled: float, w_disabled: float) -> int:
    """Tick count of a full weight sweep, matching the runtime recurrence."""
    if alpha <= 1.0:
        raise ValueError("transition factor alpha must exceed 1")
    # replicate the float loop rather than trusting ceil(log ratio)
    w, ticks = w_enabled, 0
    while w < w_disabled:
        w *= alpha
        ticks += 1
        if ticks > 10_000_000:  # pragma: no cover - pathological parameters
            raise ValueError("transition does not terminate")
    return ticks


class ContactSet:
    """All contact-capable end-effectors of a model, in document order."""

    def __init__(self, entries: list[ContactEntry]):
        self.entries = entries
        self._index = {e.name: e for e in entries}

    @staticmethod
    def from_model(model) -> "ContactSet":
        entries = [ContactEntry(e.contact) for e in model.end_effectors if e.contact is not None]
        return ContactSet(entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def entry(self, name: str) -> ContactEntry:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown contact '{name}'") from None

    def constrained(self) -> list[ContactEntry]:
        """Contacts currently carrying wrench columns, stacking order."""
        return [e for e in self.entries if e.constrained]

    def free_names(self) -> list[str]:
        return [e.name for e in self.entries if not e.constrained]

    def wrench_dim(self) -> int:
        return sum(e.spec.dim for e in self.constrained())

    def counts(self) -> tuple[int, int]:
        planes = sum(1 for e in self.constrained() if e.spec.kind == PLANE)
        points = sum(1 for e in self.constrained() if e.spec.kind == POINT)
        return planes, points

    def copy(self) -> "ContactSet":
        entries = []
        for e in self.entries:
            ne = ContactEntry(e.spec, e.state.copy())
            ne._rows_cache = e._rows_cache  # specs are immutable, rows shareable
            entries.append(ne)
        return ContactSet(entries)

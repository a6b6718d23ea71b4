"""Scenario and log file handling plus headless runs.

Scenario files are JSON lines.  An optional first record
{"header": {...}} configures duration, tracking mode and disturbance
schedules; every other record is {"tick": N, "command": {...}} with the
command schema of runtime.CommandMessage.  Logs are JSON lines with one
record per tick; CSV extracts carry the plot-panel quantities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contacts import ContactEntry, ContactSet, ContactState, ENABLED
from .geometry import Pose, quat_to_matrix
from .model import BasePose, GeneralizedPosition, RobotModel, load_model_file
from .retarget import WeightSet
from .runtime import CommandMessage, Disturbance, LogRecord, Session, TrackingModel
from .verify import EQUILIBRIUM_TOL, INEQUALITY_SLACK_TOL, is_feasible, state_checks


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    commands: list[tuple[int, CommandMessage]] = field(default_factory=list)
    duration_ticks: int = 1000
    tracking_mode: str | None = None
    tracking_stiffness: float = 50.0
    tracking_response: float = 0.02
    disturbances: list[Disturbance] = field(default_factory=list)

    def max_command_tick(self) -> int:
        return max((t for t, _ in self.commands), default=0)


def load_scenario(path) -> Scenario:
    scenario = Scenario()
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from None
            if "header" in data:
                header = data["header"]
                scenario.duration_ticks = int(header.get("duration_ticks", scenario.duration_ticks))
                scenario.tracking_mode = header.get("tracking")
                scenario.tracking_stiffness = float(header.get("stiffness", scenario.tracking_stiffness))
                scenario.tracking_response = float(header.get("response", scenario.tracking_response))
                scenario.disturbances = [Disturbance.from_dict(d) for d in header.get("disturbances", [])]
                continue
            if "tick" not in data or "command" not in data:
                raise ScenarioError(f"{path}:{line_no}: record needs 'tick' and 'command'")
            scenario.commands.append((int(data["tick"]), CommandMessage.from_dict(data["command"])))
    scenario.commands.sort(key=lambda item: (item[0], item[1].seq))
    return scenario


def write_scenario(path, scenario: Scenario) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        header: dict = {"duration_ticks": scenario.duration_ticks}
        if scenario.tracking_mode:
            header["tracking"] = scenario.tracking_mode
            header["stiffness"] = scenario.tracking_stiffness
            header["response"] = scenario.tracking_response
        handle.write(json.dumps({"header": header}) + "\n")
        for tick, msg in scenario.commands:
            handle.write(json.dumps({"tick": tick, "command": msg.to_dict()}) + "\n")


def read_log(path):
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


@dataclass
class RunSpec:
    model: str
    scenario: str
    weights: str | None = None
    tracking: str | None = None  # overrides the scenario header
    tick_rate: float = 1000.0
    out_dir: str = "out"
    seed: int = 0
    probe_period: int = 50


@dataclass
class RunSummary:
    ticks: int
    max_equilibrium_residual: float
    max_kinematic_residual: float
    saturation_histogram: dict
    switch_events: list
    mean_step_ms: float
    max_step_ms: float
    final_modes: dict

    def to_dict(self) -> dict:
        return {
            "ticks": self.ticks,
            "max_equilibrium_residual": self.max_equilibrium_residual,
            "max_kinematic_residual": self.max_kinematic_residual,
            "saturation_histogram": self.saturation_histogram,
            "switch_events": self.switch_events,
            "mean_step_ms": self.mean_step_ms,
            "max_step_ms": self.max_step_ms,
            "final_modes": self.final_modes,
        }


def build_session(spec: RunSpec) -> tuple[Session, Scenario]:
    model = load_model_file(spec.model)
    weights = WeightSet.from_file(spec.weights) if spec.weights else WeightSet()
    scenario = load_scenario(spec.scenario)
    mode = spec.tracking or scenario.tracking_mode or "perfect"
    tracking = TrackingModel(
        mode=mode,
        stiffness=scenario.tracking_stiffness,
        response=scenario.tracking_response,
        disturbances=scenario.disturbances,
    )
    session = Session(
        model,
        weights,
        tracking,
        tick_rate=spec.tick_rate,
        probe_period=spec.probe_period,
        seed=spec.seed,
    )
    return session, scenario


def run(spec: RunSpec, log_path=None, summary_path=None, csv_path=None, keep_records=False):
    """Headless scenario run; writes the tick log, summary and CSV panels.

    Records stream to disk; keep_records=True additionally returns them
    (tests only: retaining every record makes old-generation garbage
    collections scan the whole history and adds tail latency).
    """
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = Path(log_path) if log_path else out_dir / "log.jsonl"
    summary_path = Path(summary_path) if summary_path else out_dir / "summary.json"
    csv_path = Path(csv_path) if csv_path else out_dir / "panels.csv"

    session, scenario = build_session(spec)
    pending = list(scenario.commands)
    total = max(scenario.duration_ticks, scenario.max_command_tick() + 1)
    records: list[LogRecord] = []
    sat_hist: dict[str, int] = {}
    switch_events: list = []
    max_eq, max_kin = 0.0, 0.0
    wall = np.zeros(total)
    with open(log_path, "w", encoding="utf-8") as log_file:
        csv_writer = PanelsCsvWriter(csv_path, session.model)
        for tick in range(1, total + 1):
            while pending and pending[0][0] <= tick:
                _, msg = pending.pop(0)
                session.ingest(msg)
            record = session.tick()
            if keep_records:
                records.append(record)
            log_file.write(json.dumps(record.to_dict()) + "\n")
            csv_writer.write(record)
            max_eq = max(max_eq, record.equilibrium_residual)
            for pair in record.kinematic_residuals.values():
                max_kin = max(max_kin, pair[0])
            for sat in record.saturations:
                sat_hist[sat] = sat_hist.get(sat, 0) + 1
            for event in record.events:
                switch_events.append({"tick": record.tick, "event": event})
            wall[tick - 1] = record.step_time_ns
        csv_writer.close()
    summary = RunSummary(
        ticks=total,
        max_equilibrium_residual=max_eq,
        max_kinematic_residual=max_kin,
        saturation_histogram=sat_hist,
        switch_events=switch_events,
        mean_step_ms=float(np.mean(wall)) / 1e6 if total else 0.0,
        max_step_ms=float(np.max(wall)) / 1e6 if total else 0.0,
        final_modes={e.name: e.state.mode for e in session.state.contacts},
    )
    with open(summary_path, "w", encoding="utf-8") as handle:
        json.dump(summary.to_dict(), handle, indent=2)
        handle.write("\n")
    return session, records, summary


CSV_SCHEMA = "mcretarget-panels-v1"


class PanelsCsvWriter:
    """Streams plot-panel quantities, one row per tick, loss-free floats."""

    def __init__(self, path, model: RobotModel):
        self.effectors = [e.name for e in model.end_effectors]
        self.contacts = [e.name for e in model.end_effectors if e.contact is not None]
        columns = ["tick"]
        for name in self.effectors:
            columns += [f"{name}.cmd.{ax}" for ax in "xyz"]
            columns += [f"{name}.des.{ax}" for ax in "xyz"]
            columns += [f"{name}.meas.{ax}" for ax in "xyz"]
        for name in self.contacts:
            columns += [f"{name}.fz", f"{name}.eta", f"{name}.copx", f"{name}.copy", f"{name}.share", f"{name}.maxforce"]
        columns += ["saturations", "equilibrium_residual"]
        self.handle = open(path, "w", encoding="utf-8")
        self.handle.write(f"# schema={CSV_SCHEMA}\n")
        self.handle.write(",".join(columns) + "\n")

    def write(self, record: LogRecord) -> None:
        row = [str(record.tick)]
        for name in self.effectors:
            for source in (record.commanded, record.desired, record.measured):
                pos = source.get(name, {}).get("position", [float("nan")] * 3)
                row += [repr(float(v)) for v in pos]
        total_fz = sum(record.wrenches[c][-1] for c in record.wrenches)
        for name in self.contacts:
            wrench = record.wrenches.get(name)
            fz = wrench[-1] if wrench else float("nan")
            eta = record.friction.get(name, float("nan"))
            cop = record.cop.get(name, [float("nan"), float("nan")])
            share = fz / total_fz if wrench and total_fz > 0 else float("nan")
            gauge = record.max_force_gauge.get(name, float("nan"))
            row += [repr(float(v)) for v in (fz, eta, cop[0], cop[1], share, gauge)]
        row.append(str(len(record.saturations)))
        row.append(repr(float(record.equilibrium_residual)))
        self.handle.write(",".join(row) + "\n")

    def close(self) -> None:
        self.handle.close()


def write_panels_csv(path, records: list[LogRecord], model: RobotModel) -> None:
    writer = PanelsCsvWriter(path, model)
    for record in records:
        writer.write(record)
    writer.close()


def read_panels_csv(path):
    """Parse a panels CSV back into (schema, columns, rows of floats)."""
    with open(path, "r", encoding="utf-8") as handle:
        schema_line = handle.readline().strip()
        if not schema_line.startswith("# schema="):
            raise ScenarioError(f"{path}: missing schema header")
        schema = schema_line.split("=", 1)[1]
        columns = handle.readline().strip().split(",")
        rows = []
        for line in handle:
            parts = line.strip().split(",")
            rows.append([float(p) for p in parts])
    return schema, columns, rows


def contact_set_from_record(model: RobotModel, record: dict) -> tuple[ContactSet, dict]:
    """Rebuild the contact configuration a log record describes."""
    contacts = ContactSet.from_model(model)
    wrenches = {}
    for entry in contacts:
        mode = record["contact_modes"].get(entry.name, "disabled")
        entry.state.mode = mode
        if mode != "disabled":
            anchor_data = record["anchors"][entry.name]
            quat = np.asarray(anchor_data["orientation"], dtype=float)
            entry.state.anchor = Pose(
                quat_to_matrix(quat / np.linalg.norm(quat)),
                np.asarray(anchor_data["position"], dtype=float),
            )
            wrenches[entry.name] = np.asarray(record["wrenches"][entry.name], dtype=float)
    return contacts, wrenches


def verify_log(model: RobotModel, records, equilibrium_tol: float = EQUILIBRIUM_TOL,
               slack_tol: float = INEQUALITY_SLACK_TOL) -> dict:
    """Re-check every record against the per-tick safety invariant.

    Engine-independent: recomputes gravity, contact Jacobians and cone
    rows from the model and the logged state alone.  Returns a report;
    'ok' is False at the first violating tick.
    """
    n = model.n
    checked = 0
    worst = {"equilibrium_residual": 0.0, "cone_slack": np.inf, "joint_slack": np.inf, "torque_slack": np.inf}
    for record in records:
        q_flat = np.asarray(record["q"], dtype=float)
        if q_flat.shape[0] != 7 + n:
            return {"ok": False, "tick": record.get("tick"), "reason": f"q has {q_flat.shape[0]} values, expected {7 + n}"}
        q = GeneralizedPosition(BasePose(q_flat[:4], q_flat[4:7]), q_flat[7:])
        tau = np.asarray(record["tau"], dtype=float)
        contacts, wrenches = contact_set_from_record(model, record)
        checks = state_checks(model, q, tau, contacts, wrenches)
        worst["equilibrium_residual"] = max(worst["equilibrium_residual"], checks["equilibrium_residual"])
        worst["cone_slack"] = min(worst["cone_slack"], checks["cone_slack"])
        worst["joint_slack"] = min(worst["joint_slack"], checks["joint_slack"])
        worst["torque_slack"] = min(worst["torque_slack"], checks["torque_slack"])
        if not is_feasible(checks, equilibrium_tol, slack_tol):
            return {"ok": False, "tick": record["tick"], "reason": "per-tick safety invariant violated", "checks": checks, "worst": worst, "checked": checked}
        checked += 1
    return {"ok": True, "checked": checked, "worst": worst}

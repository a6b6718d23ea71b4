#!/usr/bin/env python3
"""Regenerate the bundled scenario files under src/mcretarget/assets/."""

import json
from pathlib import Path

ASSETS = Path(__file__).resolve().parents[1] / "src" / "mcretarget" / "assets"


class Builder:
    def __init__(self, duration, tracking=None, stiffness=50.0, response=0.02, disturbances=None):
        self.lines = []
        header = {"duration_ticks": duration}
        if tracking:
            header["tracking"] = tracking
            header["stiffness"] = stiffness
            header["response"] = response
        if disturbances:
            header["disturbances"] = disturbances
        self.lines.append(json.dumps({"header": header}))
        self.seq = 0

    def cmd(self, tick, **kwargs):
        self.seq += 1
        kwargs["seq"] = self.seq
        self.lines.append(json.dumps({"tick": tick, "command": kwargs}))

    def jog_ramp(self, start, count, effector, step):
        """One jog command per tick for `count` ticks."""
        for k in range(count):
            self.cmd(start + k, kind="jog_effector", effector=effector,
                     twist=[0, 0, 0, step[0], step[1], step[2]])

    def write(self, name):
        path = ASSETS / name
        path.write_text("\n".join(self.lines) + "\n")
        print(path)


def reach():
    # far forward reach with the left hand: tracks, then saturates the
    # support-foot CoP at the +x edge while staying balanced
    b = Builder(duration=10_000)
    b.jog_ramp(200, 8000, "hand_l", (1e-4, 0.0, 0.0))
    b.write("reach.jsonl")


def push():
    # park the right hand over a virtual ledge, add the contact, then
    # ramp the commanded normal force past the fixed-posture maximum
    b = Builder(duration=14_000)
    b.jog_ramp(100, 1500, "hand_r", (0.089 / 1500, 0.0186 / 1500, -0.2405 / 1500))
    b.cmd(1700, kind="trigger_switch", effector="hand_r", action="add")
    # transition completes after 2309 ticks (~tick 4010)
    force = 0.0
    for k in range(860):
        force += 0.07
        b.cmd(4200 + 10 * k, kind="set_force_target", effector="hand_r",
              normal_force=round(force, 4), weight_override=1e4)
    b.write("push.jsonl")


def switch():
    # lift the left foot: smooth removal, then raise it as a free effector
    b = Builder(duration=6_000)
    b.cmd(500, kind="trigger_switch", effector="foot_l", action="remove")
    b.jog_ramp(3200, 1000, "foot_l", (0.0, 0.0, 5e-5))
    b.write("switch.jsonl")


def locomotion():
    # two-step quadruped crawl (both hind feet); the operator shifts the
    # trunk over the remaining support before each removal; a faster
    # switching factor keeps the desk run short (582-tick transitions)
    b = Builder(duration=7_500)
    b.cmd(100, kind="set_weights", weights={"alpha": 1.02})
    b.jog_ramp(200, 1000, "trunk_frame", (6e-5, 5e-5, 0.0))
    b.cmd(1300, kind="trigger_switch", effector="foot_rh", action="remove")
    b.jog_ramp(2000, 200, "foot_rh", (0.0, 0.0, 1e-4))
    b.jog_ramp(2200, 200, "foot_rh", (3e-4, 0.0, 0.0))
    b.jog_ramp(2400, 200, "foot_rh", (0.0, 0.0, -1e-4))
    b.cmd(2700, kind="trigger_switch", effector="foot_rh", action="add")
    b.jog_ramp(3400, 1000, "trunk_frame", (4e-5, -1.1e-4, 0.0))
    b.cmd(4500, kind="trigger_switch", effector="foot_lh", action="remove")
    b.jog_ramp(5200, 200, "foot_lh", (0.0, 0.0, 1e-4))
    b.jog_ramp(5400, 200, "foot_lh", (3e-4, 0.0, 0.0))
    b.jog_ramp(5600, 200, "foot_lh", (0.0, 0.0, -1e-4))
    b.cmd(5900, kind="trigger_switch", effector="foot_lh", action="add")
    b.jog_ramp(6600, 600, "trunk_frame", (-1.3e-4, 1.0e-4, 0.0))
    b.write("locomotion.jsonl")


def disturb():
    # spring-damper tracking under a lateral torso push and a direct
    # joint offset; one contact measurement slips mid-run
    disturbances = [
        {"kind": "wrench", "frame": "torso", "wrench": [0, 3.0, 0, 4.0, 0, 0],
         "start_tick": 1000, "end_tick": 5000},
        {"kind": "joint_offset", "joint": "shoulder_pitch_r", "offset": 0.3,
         "start_tick": 2000, "end_tick": 5000},
        {"kind": "slip", "frame": "foot_l", "slip": [0.003, 0.0, 0.0], "start_tick": 3000},
    ]
    b = Builder(duration=6_000, tracking="spring-damper", stiffness=50.0,
                response=0.02, disturbances=disturbances)
    b.write("disturb.jsonl")


if __name__ == "__main__":
    reach()
    push()
    switch()
    locomotion()
    disturb()

"""Pushing down on a ledge: force tracking and postural adaptation.

The hand is parked over a virtual surface, added as a point contact,
then a normal-force target ramps up with a high task weight.  The
fixed-posture LP probe shows the feasible maximum rising as the whole
body leans into the push.
"""

import numpy as np

from mcretarget import load_model_file
from mcretarget.cli import ASSET_DIR
from mcretarget.runtime import CommandMessage, Session

model = load_model_file(ASSET_DIR / "biped.urdf")
session = Session(model, probe_period=40)
session.engine.weights.alpha = 1.02  # short add transition for the demo

seq = 0


def cmd(**kwargs):
    global seq
    seq += 1
    session.ingest(CommandMessage(seq=seq, **kwargs))


# park the hand lower and forward, where pushing down is effective
for k in range(600):
    cmd(kind="jog_effector", effector="hand_r",
        twist=np.array([0, 0, 0, 1.5e-4, 3e-5, -4e-4]))
    session.tick()

cmd(kind="trigger_switch", effector="hand_r", action="add")
while session.state.contacts.entry("hand_r").state.mode != "enabled":
    session.tick()
print("contact added at tick", session.tick_index)

force = 0.0
for k in range(5000):
    if k % 10 == 0 and force < 55.0:
        force += 0.1
        cmd(kind="set_force_target", effector="hand_r", normal_force=force,
            weight_override=1e4)
    record = session.tick()
    if (k + 1) % 500 == 0:
        fz = record.wrenches["hand_r"][-1]
        gauge = record.max_force_gauge.get("hand_r", float("nan"))
        print(f"tick {record.tick:5d}  commanded {force:5.1f} N  applied {fz:5.2f} N  "
              f"feasible max {gauge:5.2f} N  saturated rows {len(record.saturations)}")

final = session.tick()
print("\nfinal applied force:", round(final.wrenches["hand_r"][-1], 2), "N;",
      "probe:", round(final.max_force_gauge["hand_r"], 2), "N")
print("leaning into the push raised the feasible maximum as the command grew;")
print("past it, the desired force would ride the boundary (see the push scenario)")

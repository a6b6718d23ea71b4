"""A scripted teleoperation session through the command interface.

Drives the same Session object the WebSocket server wraps: jogs, an
emergency stop, a resume, and a contact switch, with the per-tick log
records a UI would render.
"""

import numpy as np

from mcretarget import load_model_file
from mcretarget.cli import ASSET_DIR
from mcretarget.runtime import CommandMessage, Session

model = load_model_file(ASSET_DIR / "biped.urdf")
session = Session(model)
session.engine.weights.alpha = 1.012
seq = 0


def cmd(**kwargs):
    global seq
    seq += 1
    session.ingest(CommandMessage(seq=seq, **kwargs))


print("jogging the left hand forward...")
for _ in range(150):
    cmd(kind="jog_effector", effector="hand_l", twist=np.array([0, 0, 0, 3e-4, 0, 0]))
    session.tick()
hand = session.state.ensure_cache(model).effector_pose("hand_l").position
print("hand now at", np.round(hand, 3))

print("\nemergency stop: the zero increment is always feasible, so the")
print("desired state freezes instantly and stays balanced")
cmd(kind="emergency_stop")
for _ in range(50):
    record = session.tick()
    assert record.dx_norm == 0.0
print("50 frozen ticks, increment exactly zero, residual",
      f"{record.equilibrium_residual:.2e} N")

cmd(kind="resume")
print("\nresumed; triggering a foot removal")
cmd(kind="trigger_switch", effector="foot_l", action="remove")
while True:
    record = session.tick()
    if any(e.startswith("removed") or e.startswith("removal-failed") for e in record.events):
        print("switch finished at tick", record.tick, "->", record.events)
        break
    if record.tick % 150 == 0:
        progress = record.switch_progress.get("foot_l", 0.0)
        print(f"  tick {record.tick:5d}  switch progress {progress:4.0%}  "
              f"right foot load {record.wrenches['foot_r'][-1]:6.2f} N")

print("final contact modes:", record.contact_modes)

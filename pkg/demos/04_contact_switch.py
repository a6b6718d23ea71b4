"""Smooth removal of a foot contact.

The regularization weight on the left foot's wrench grows by the factor
alpha every tick; force and posture migrate to the right foot, and the
contact is released once its wrench is numerically zero.  A faster
alpha keeps the demo short; at the default 1.005 and 1 kHz the same
schedule takes exactly 2309 ticks (2.309 s).
"""

import numpy as np

from mcretarget import expected_transition_ticks, load_model_file
from mcretarget.cli import ASSET_DIR
from mcretarget.retarget import RetargetEngine, WeightSet, initialize_state

model = load_model_file(ASSET_DIR / "biped.urdf")
weights = WeightSet()
weights.alpha = 1.02  # demo speed; default 1.005 gives the 2309-tick schedule
engine = RetargetEngine(model, weights)
state, _ = initialize_state(engine)

print("default schedule length:", expected_transition_ticks(1.005, 1e-5, 1.0), "ticks")
print("demo schedule length:   ", expected_transition_ticks(1.02, 1e-5, 1.0), "ticks")

verdict = engine.offline_switch_feasibility(state, "foot_l")
print("\noffline dry-run verdict:", verdict)

targets = engine.hold_targets(state)
targets.wrench_targets = {}
state.contacts.entry("foot_l").start_remove(weights.contact_enabled)
tick = 0
while True:
    tick += 1
    entry = state.contacts.entry("foot_l")
    event = entry.switching_step(
        weights.alpha, weights.contact_enabled, weights.contact_disabled,
        float(np.linalg.norm(state.wrench_of("foot_l"))),
    )
    if event != "in_progress":
        print(f"tick {tick}: {event}")
        break
    state, report = engine.step(state, targets)
    if tick % 70 == 0:
        fz_l = state.wrenches["foot_l"][5]
        fz_r = state.wrenches["foot_r"][5]
        print(f"tick {tick:4d}  w={entry.state.weight:.4f}  fz left {fz_l:6.2f} N  right {fz_r:6.2f} N")

print("remaining foot carries", round(state.wrenches["foot_r"][5], 2), "N of",
      round(model.total_mass * 9.81, 2), "N total weight")

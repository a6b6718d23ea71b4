"""Far forward reach until the support-foot center of pressure saturates.

The commanded hand target ramps past what balance allows; the desired
motion tracks it, then stalls exactly when the CoP reaches the front
edge of the feet (0.11 m), while every tick stays statically feasible.
Writes reach_cop.png when matplotlib is importable.
"""

import numpy as np

from mcretarget import load_model_file
from mcretarget.cli import ASSET_DIR
from mcretarget.contacts import cop_of_wrench
from mcretarget.kinematics import forward_kinematics
from mcretarget.retarget import RetargetEngine, initialize_state

model = load_model_file(ASSET_DIR / "biped.urdf")
engine = RetargetEngine(model)
state, targets = initialize_state(engine)
hand0 = targets.effector_poses["hand_l"].position.copy()

ticks, hand_x, cmd_x, cop_x = [], [], [], []
for k in range(4000):
    targets.effector_poses["hand_l"].position = hand0 + np.array([2.5e-4 * (k + 1), 0, 0])
    state, report = engine.step(state, targets)
    if (k + 1) % 40 == 0:
        ticks.append(k + 1)
        cmd_x.append(targets.effector_poses["hand_l"].position[0])
        hand_x.append(forward_kinematics(model, state.q, "hand_l").position[0])
        cop_x.append(cop_of_wrench(state.wrenches["foot_l"])[0])

for i in range(0, len(ticks), 10):
    flag = "  <- CoP saturated" if cop_x[i] > 0.1095 else ""
    print(f"tick {ticks[i]:5d}  cmd {cmd_x[i]:.3f}  hand {hand_x[i]:.3f}  CoPx {cop_x[i]:.4f}{flag}")

print(f"\nfinal: commanded {cmd_x[-1]:.3f} m, reached {hand_x[-1]:.3f} m, "
      f"CoPx pinned at {cop_x[-1]:.4f} m (foot edge 0.110)")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    top.plot(ticks, cmd_x, label="commanded x")
    top.plot(ticks, hand_x, label="retargeted x")
    top.set_ylabel("hand x [m]")
    top.legend()
    bottom.plot(ticks, cop_x)
    bottom.axhline(0.11, color="r", linestyle="--", label="foot edge")
    bottom.set_ylabel("support CoP x [m]")
    bottom.set_xlabel("tick")
    bottom.legend()
    fig.tight_layout()
    fig.savefig("reach_cop.png", dpi=120)
    print("wrote reach_cop.png")
except ImportError:
    pass

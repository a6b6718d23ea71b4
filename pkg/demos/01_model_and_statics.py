"""Load the bundled biped, poke at kinematics and the static terms.

Shows the pieces the per-tick optimization is built from: forward
kinematics, frame Jacobians, the generalized gravity vector, and the
analytic derivatives checked against finite differences.
"""

import numpy as np

from mcretarget import (
    KinematicsCache,
    forward_kinematics,
    frame_jacobian,
    gravity_jacobian,
    gravity_vector,
    integrate_configuration,
    load_model_file,
    pose_difference,
)
from mcretarget.cli import ASSET_DIR

model = load_model_file(ASSET_DIR / "biped.urdf")
print(f"{model.name}: {model.n} actuated joints, {len(model.bodies)} bodies, "
      f"{model.total_mass:.2f} kg")

q = model.neutral_position()
for name in ("foot_l", "foot_r", "hand_l", "hand_r"):
    pose = forward_kinematics(model, q, name)
    print(f"  {name:8s} at {np.round(pose.position, 3)}")

# the frame Jacobian is the derivative of the pose under tangent moves
J = frame_jacobian(model, q, "hand_l")
delta = np.zeros(model.nv)
delta[6 + 14] = 1e-4  # wiggle one arm joint
moved = forward_kinematics(model, integrate_configuration(q, delta), "hand_l")
lin = pose_difference(moved, forward_kinematics(model, q, "hand_l"))
print("\nJacobian prediction vs finite move:",
      np.linalg.norm(lin - J @ delta), "(should be ~1e-12)")

G = gravity_vector(model, q)
print(f"\ngravity vector: base force rows {np.round(G[3:6], 2)} "
      f"= total weight {model.total_mass * 9.81:.2f} N upward support")

dG = gravity_jacobian(model, q)
eps = 1e-6
fd = np.zeros_like(dG)
for j in range(model.nv):
    step = np.zeros(model.nv)
    step[j] = eps
    fd[:, j] = (
        gravity_vector(model, integrate_configuration(q, step))
        - gravity_vector(model, integrate_configuration(q, -step))
    ) / (2 * eps)
print("gravity Jacobian vs central differences:",
      f"{np.linalg.norm(dG - fd) / np.linalg.norm(fd):.2e} relative")

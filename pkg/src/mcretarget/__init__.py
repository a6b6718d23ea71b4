"""Multi-contact whole-body motion retargeting for teleoperated robots.

Per control tick, an operator's end-effector pose and force commands
are converted into a statically balanced robot configuration (joint
positions, joint torques, contact wrenches) by one linearization plus
one strictly convex QP solve, with smooth contact addition and removal.
"""

import os as _os

# The per-tick matrices are far too small for threaded BLAS; thread
# convoying on them costs more than it saves and adds tens of
# milliseconds of tail latency.  Best effort: only effective when
# numpy has not been imported yet.
_os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

from .contacts import (
    ContactSet,
    ContactSpec,
    ContactState,
    build_contact_inequalities,
    cop_of_wrench,
    expected_transition_ticks,
    friction_ratio,
)
from .geometry import Pose, pose_difference
from .kinematics import (
    KinematicsCache,
    forward_kinematics,
    frame_jacobian,
    integrate_configuration,
)
from .model import (
    BasePose,
    GeneralizedPosition,
    ModelError,
    RobotModel,
    load_model,
    load_model_file,
)
from .qp import QpProblem, QpSolution, solve_qp, weighted_least_squares_to_qp
from .retarget import RetargetEngine, RetargetState, StepReport, TaskTargets, WeightSet
from .statics import (
    contact_hessian_product,
    equilibrium_residual,
    gravity_jacobian,
    gravity_vector,
)

__version__ = "0.1.0"

__all__ = [
    "BasePose",
    "ContactSet",
    "ContactSpec",
    "ContactState",
    "GeneralizedPosition",
    "KinematicsCache",
    "ModelError",
    "Pose",
    "QpProblem",
    "QpSolution",
    "RetargetEngine",
    "RetargetState",
    "RobotModel",
    "StepReport",
    "TaskTargets",
    "WeightSet",
    "build_contact_inequalities",
    "contact_hessian_product",
    "cop_of_wrench",
    "equilibrium_residual",
    "expected_transition_ticks",
    "forward_kinematics",
    "frame_jacobian",
    "friction_ratio",
    "gravity_jacobian",
    "gravity_vector",
    "integrate_configuration",
    "load_model",
    "load_model_file",
    "pose_difference",
    "solve_qp",
    "weighted_least_squares_to_qp",
]

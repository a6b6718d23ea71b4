"""Engine-independent feasibility checks of a desired configuration.

Recomputes gravity, contact Jacobian transposes and stability rows
straight from the model, so a logged state can be audited without
trusting the optimizer that produced it.
"""

from __future__ import annotations

import numpy as np

from .contacts import ContactSet
from .model import GeneralizedPosition, RobotModel
from .statics import equilibrium_residual

EQUILIBRIUM_TOL = 1e-2  # N, steady-state bound on the generalized residual
INEQUALITY_SLACK_TOL = 1e-6


def state_checks(
    model: RobotModel,
    q: GeneralizedPosition,
    tau: np.ndarray,
    contacts: ContactSet,
    wrenches: dict[str, np.ndarray],
) -> dict:
    """Worst-case measures of every per-tick safety requirement.

    Returns equilibrium residual (inf-norm), the most negative slack of
    the joint-position, joint-torque and contact-stability rows, and
    per-category detail for diagnostics.
    """
    lam_parts = [wrenches[e.name] for e in contacts.constrained()]
    lam = np.concatenate(lam_parts) if lam_parts else np.zeros(0)
    residual = equilibrium_residual(model, q, tau, contacts, lam)

    low, high = model.joint_limits()
    joint_slack = np.minimum(q.joints - low, high - q.joints)
    tau_slack = model.effort_limits() - np.abs(tau)

    cone_slack, cone_rows = np.inf, {}
    for entry in contacts.constrained():
        A, b, labels = entry.inequality_rows()
        slack = A @ wrenches[entry.name] + b
        cone_rows[entry.name] = float(np.min(slack))
        cone_slack = min(cone_slack, cone_rows[entry.name])

    return {
        "equilibrium_residual": float(np.linalg.norm(residual, np.inf)),
        "joint_slack": float(np.min(joint_slack)) if joint_slack.size else np.inf,
        "torque_slack": float(np.min(tau_slack)) if tau_slack.size else np.inf,
        "cone_slack": float(cone_slack),
        "cone_rows": cone_rows,
    }


def is_feasible(checks: dict,
                equilibrium_tol: float = EQUILIBRIUM_TOL,
                slack_tol: float = INEQUALITY_SLACK_TOL) -> bool:
    return (
        checks["equilibrium_residual"] <= equilibrium_tol
        and checks["joint_slack"] >= -slack_tol
        and checks["torque_slack"] >= -slack_tol
        and checks["cone_slack"] >= -slack_tol
    )

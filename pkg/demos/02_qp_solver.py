"""The dual active-set QP solver on its own.

Solves a small constrained least-squares problem, prints the active
set, and cross-checks against brute-force enumeration of active sets.
"""

import itertools

import numpy as np

from mcretarget import QpProblem, solve_qp, weighted_least_squares_to_qp
from mcretarget.qp import kkt_residuals

# fit x to two targets with different weights, subject to a box
P, r = weighted_least_squares_to_qp([
    (np.eye(3), np.array([1.0, 2.0, 3.0]), 1.0),
    (np.eye(3), np.array([0.0, 0.0, 0.0]), 0.2),
])
problem = QpProblem(
    P, r,
    Aeq=np.array([[1.0, 1.0, 1.0]]), beq=np.array([-2.5]),  # sum(x) = 2.5
    Aineq=np.vstack([np.eye(3), -np.eye(3)]),
    bineq=np.concatenate([np.zeros(3), 2.0 * np.ones(3)]),  # 0 <= x <= 2
)
sol = solve_qp(problem)
print("solution:", np.round(sol.x, 6))
print("active inequalities:", sol.active_inequalities)
print("iterations:", sol.iterations)
print("KKT certificate:", {k: f"{v:.2e}" for k, v in kkt_residuals(problem, sol).items()})

# brute force: try every subset of inequalities as equalities
best, best_obj = None, np.inf
d, m = problem.dim, problem.Aineq.shape[0]
for k in range(m + 1):
    for subset in itertools.combinations(range(m), k):
        A = np.vstack([problem.Aeq] + [problem.Aineq[list(subset)]]) if subset else problem.Aeq
        b = np.concatenate([problem.beq] + [problem.bineq[list(subset)]]) if subset else problem.beq
        K = np.block([[problem.P, A.T], [A, np.zeros((A.shape[0], A.shape[0]))]])
        try:
            z = np.linalg.solve(K, np.concatenate([-problem.r, -b]))
        except np.linalg.LinAlgError:
            continue
        x = z[:d]
        if np.min(problem.Aineq @ x + problem.bineq) < -1e-8:
            continue
        obj = problem.objective(x)
        if obj < best_obj:
            best, best_obj = x, obj
print("\nenumeration agrees to", np.linalg.norm(sol.x - best), "in x")

"""Dense dual active-set solver for strictly convex QPs.

Solves  min 1/2 x^T P x + r^T x
        s.t. Aeq x + beq = 0,  Aineq x + bineq >= 0

with the numerically stable dual method of Goldfarb and Idnani: start
at the unconstrained minimum, add the most violated constraint at a
time, and keep the active-set factorization (J = L^-T Q, triangular R)
updated by Givens rotations.  Dual feasibility holds throughout, which
is what keeps the method well behaved when the optimum sits on
saturated boundaries.  All operations are deterministic: the same
problem yields the same solution and active set, bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dtrtrs

EPS_REG = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration-limit"

_VIOLATION_TOL = 1e-10
_ZERO_STEP_TOL = 1e-13
# a transformed row is dependent when its remaining component is at the
# level of accumulated roundoff (eps^2 * |d|^2 ~ 1e-23 |d|^2), far below
# the smallest honest rows that ill-scaled free directions produce
_DEPENDENT_TOL = 1e-24


@dataclass
class QpProblem:
    """Strictly convex QP data; P must be symmetric positive definite."""

    P: np.ndarray
    r: np.ndarray
    Aeq: np.ndarray
    beq: np.ndarray
    Aineq: np.ndarray
    bineq: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        d = self.r.shape[0]
        self.Aeq = np.asarray(self.Aeq, dtype=float).reshape(-1, d)
        self.beq = np.asarray(self.beq, dtype=float).reshape(-1)
        self.Aineq = np.asarray(self.Aineq, dtype=float).reshape(-1, d)
        self.bineq = np.asarray(self.bineq, dtype=float).reshape(-1)
        if self.P.shape != (d, d):
            raise ValueError(f"cost matrix is {self.P.shape}, expected ({d}, {d})")
        if self.Aeq.shape[0] != self.beq.shape[0]:
            raise ValueError("equality rows and offsets disagree")
        if self.Aineq.shape[0] != self.bineq.shape[0]:
            raise ValueError("inequality rows and offsets disagree")
        if not np.allclose(self.P, self.P.T, atol=1e-9):
            raise ValueError("cost matrix is not symmetric")

    @property
    def dim(self) -> int:
        return self.r.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.P @ x + self.r @ x)


@dataclass
class QpSolution:
    x: np.ndarray
    status: str
    iterations: int
    active_inequalities: tuple[int, ...] = ()
    eq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ineq_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def weighted_least_squares_to_qp(blocks, dim: int | None = None, eps_reg: float = EPS_REG):
    """Stack (C, c, w) blocks of sum_k w_k ||C_k x - c_k||^2 into (P, r).

    w may be a scalar or a per-row vector.  The diagonal regularization
    eps_reg keeps P strictly positive definite even when low-weight
    blocks leave near-null directions.
    """
    if dim is None:
        if not blocks:
            raise ValueError("cannot infer dimension from an empty block list")
        dim = np.asarray(blocks[0][0]).shape[1]
    P = np.zeros((dim, dim))
    r = np.zeros(dim)
    for C, c, w in blocks:
        C = np.asarray(C, dtype=float)
        c = np.asarray(c, dtype=float).reshape(-1)
        if C.shape != (c.shape[0], dim):
            raise ValueError(f"block shape {C.shape} does not match residual {c.shape} and dim {dim}")
        w = np.asarray(w, dtype=float)
        if w.ndim == 0:
            w = np.full(c.shape[0], float(w))
        elif w.shape != c.shape:
            raise ValueError(f"weight shape {w.shape} does not match residual {c.shape}")
        CW = C * w[:, None]
        P += CW.T @ C
        r -= CW.T @ c
    P += eps_reg * np.eye(dim)
    return P, r


class QpSolver:
    """Holds scratch workspace; one solve at a time per instance."""

    def solve(self, problem: QpProblem, max_iterations: int | None = None) -> QpSolution:
        # Jacobi equilibration: task weights span ~10 orders of magnitude,
        # so solve in variables scaled to unit cost diagonal.  Slacks,
        # multipliers and the active set are invariant under this change.
        scale = 1.0 / np.sqrt(np.diag(problem.P))
        P = problem.P * scale[:, None] * scale[None, :]
        r = problem.r * scale
        Aeq, beq = problem.Aeq * scale[None, :], problem.beq
        Ain, bin_ = problem.Aineq * scale[None, :], problem.bineq
        d = problem.dim
        meq, mineq = Aeq.shape[0], Ain.shape[0]
        if max_iterations is None:
            max_iterations = 10 * (d + mineq)

        L = np.linalg.cholesky(P)
        # J = L^-T, P-orthonormal columns; rotated as constraints come and go
        J = dtrtrs(L, np.eye(d), lower=1, trans=1)[0]
        x = -dtrtrs(L, dtrtrs(L, r, lower=1)[0], lower=1, trans=1)[0]

        R = np.zeros((d, d))
        active: list[int] = []  # >=0: inequality index, -1-i: equality i
        u = np.zeros(d)
        q = 0
        iterations = 0

        def add_constraint(d_vec: np.ndarray) -> None:
            # one Householder reflection folds the tail of d_vec onto
            # component q; J gets the same rotation on its tail columns
            nonlocal q
            tail = d_vec[q:]
            norm = float(np.linalg.norm(tail))
            if norm > 0.0:
                rho = -norm if tail[0] >= 0.0 else norm
                v = tail.copy()
                v[0] -= rho
                vv = float(v @ v)
                if vv > 0.0:
                    Jv = J[:, q:] @ v
                    J[:, q:] -= np.outer(Jv, (2.0 / vv) * v)
                d_vec[q] = rho
                d_vec[q + 1 :] = 0.0
            R[: q + 1, q] = d_vec[: q + 1]
            q += 1

        def drop_constraint(pos: int) -> None:
            nonlocal q
            active.pop(pos)
            u[pos : q - 1] = u[pos + 1 : q]
            u[q - 1] = 0.0
            R[:, pos : q - 1] = R[:, pos + 1 : q]
            R[:, q - 1] = 0.0
            for i in range(pos, q - 1):
                a, b = R[i, i], R[i + 1, i]
                if b == 0.0:
                    continue
                rho = np.hypot(a, b)
                c, s = a / rho, b / rho
                row_i = c * R[i, i : q - 1] + s * R[i + 1, i : q - 1]
                R[i + 1, i : q - 1] = -s * R[i, i : q - 1] + c * R[i + 1, i : q - 1]
                R[i, i : q - 1] = row_i
                col = c * J[:, i] + s * J[:, i + 1]
                J[:, i + 1] = -s * J[:, i] + c * J[:, i + 1]
                J[:, i] = col
            q -= 1

        def dual_direction(d_vec: np.ndarray) -> np.ndarray:
            if q == 0:
                return np.zeros(0)
            return dtrtrs(R[:q, :q], d_vec[:q])[0]

        # equalities first, each forced active with a signed full step;
        # rows whose step direction vanishes are dependent: skipped when
        # consistent, fatal otherwise
        for i in range(meq):
            normal = Aeq[i]
            s_val = float(normal @ x + beq[i])
            d_vec = J.T @ normal
            zz = float(d_vec[q:] @ d_vec[q:])
            if zz <= _DEPENDENT_TOL * max(1.0, float(d_vec @ d_vec)):
                scale = 1.0 + float(np.linalg.norm(normal)) * (1.0 + float(np.linalg.norm(x)))
                if abs(s_val) > 1e-8 * scale:
                    return QpSolution(x * scale, INFEASIBLE, iterations)
                continue  # dependent but consistent: skip
            z = J[:, q:] @ d_vec[q:]
            t = -s_val / float(z @ normal)
            r_vec = dual_direction(d_vec)
            x = x + t * z
            u[:q] -= t * r_vec
            add_constraint(d_vec)
            active.append(-1 - i)
            u[q - 1] = t
            iterations += 1

        if mineq:
            row_scale = np.linalg.norm(Ain, axis=1)
            degenerate = row_scale < 1e-12
            if np.any(degenerate & (bin_ < -_VIOLATION_TOL)):
                return QpSolution(x * scale, INFEASIBLE, iterations)
            row_scale = np.where(degenerate, 1.0, row_scale)
        in_active = np.zeros(mineq, dtype=bool)

        status = OPTIMAL
        while mineq:
            slack = Ain @ x + bin_
            scaled = np.where(in_active, np.inf, slack / row_scale)
            chosen = int(np.argmin(scaled))
            if scaled[chosen] >= -_VIOLATION_TOL:
                break
            normal = Ain[chosen]
            u_plus = 0.0
            while True:
                iterations += 1
                if iterations > max_iterations:
                    status = ITERATION_LIMIT
                    break
                d_vec = J.T @ normal
                zz = float(d_vec[q:] @ d_vec[q:])
                full_ok = zz > _DEPENDENT_TOL * max(1.0, float(d_vec @ d_vec))
                r_vec = dual_direction(d_vec)
                t1, k1 = np.inf, -1
                for pos in range(q):
                    if active[pos] >= 0 and r_vec[pos] > _ZERO_STEP_TOL:
                        ratio = u[pos] / r_vec[pos]
                        if ratio < t1:
                            t1, k1 = ratio, pos
                if full_ok:
                    z = J[:, q:] @ d_vec[q:]
                    t2 = -float(normal @ x + bin_[chosen]) / float(z @ normal)
                else:
                    t2 = np.inf
                if full_ok and t2 <= t1:  # full step: constraint becomes active
                    x = x + t2 * z
                    u[:q] -= t2 * r_vec
                    u_plus += t2
                    add_constraint(d_vec)
                    active.append(chosen)
                    in_active[chosen] = True
                    u[q - 1] = u_plus
                    break
                if not np.isfinite(t1):
                    return QpSolution(x * scale, INFEASIBLE, iterations)
                # partial step (dual-only when no primal direction remains)
                if full_ok:
                    x = x + t1 * z
                u[:q] -= t1 * r_vec
                u_plus += t1
                dropped = active[k1]
                drop_constraint(k1)
                in_active[dropped] = False
            if status != OPTIMAL:
                break

        eq_mult = np.zeros(meq)
        ineq_mult = np.zeros(mineq)
        act_ineq = []
        for pos in range(q):
            ident = active[pos]
            if ident >= 0:
                act_ineq.append(ident)
                ineq_mult[ident] = u[pos]
            else:
                eq_mult[-1 - ident] = u[pos]
        return QpSolution(
            x=x * scale,
            status=status,
            iterations=iterations,
            active_inequalities=tuple(sorted(act_ineq)),
            eq_multipliers=eq_mult,
            ineq_multipliers=ineq_mult,
        )


def solve_qp(problem: QpProblem, max_iterations: int | None = None) -> QpSolution:
    """One-shot solve; see QpSolver for the method."""
    return QpSolver().solve(problem, max_iterations)


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> dict:
    """Post-hoc optimality certificate for an optimal solve."""
    x = solution.x
    grad = problem.P @ x + problem.r
    if problem.Aeq.shape[0]:
        grad = grad - problem.Aeq.T @ solution.eq_multipliers
    if problem.Aineq.shape[0]:
        grad = grad - problem.Aineq.T @ solution.ineq_multipliers
    slack = problem.Aineq @ x + problem.bineq if problem.Aineq.shape[0] else np.zeros(0)
    eq_res = problem.Aeq @ x + problem.beq if problem.Aeq.shape[0] else np.zeros(0)
    active = np.array(solution.active_inequalities, dtype=int)
    return {
        "stationarity": float(np.linalg.norm(grad, np.inf)),
        "equality": float(np.linalg.norm(eq_res, np.inf)) if eq_res.size else 0.0,
        "active_slack": float(np.max(np.abs(slack[active]))) if active.size else 0.0,
        "min_slack": float(np.min(slack)) if slack.size else 0.0,
        "min_multiplier": float(np.min(solution.ineq_multipliers)) if slack.size else 0.0,
        "complementarity": float(np.max(np.abs(solution.ineq_multipliers * slack))) if slack.size else 0.0,
    }


def dump_problem(problem: QpProblem, path) -> None:
    """Plain-text matrix dump for offline debugging."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"dim {problem.dim} meq {problem.Aeq.shape[0]} mineq {problem.Aineq.shape[0]}\n")
        for name, mat in (
            ("P", problem.P),
            ("r", problem.r[None, :]),
            ("Aeq", problem.Aeq),
            ("beq", problem.beq[None, :]),
            ("Aineq", problem.Aineq),
            ("bineq", problem.bineq[None, :]),
        ):
            handle.write(f"# {name}\n")
            for row in np.atleast_2d(mat):
                handle.write(" ".join(repr(float(v)) for v in row) + "\n")

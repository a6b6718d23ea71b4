import itertools

import numpy as np
import pytest

from mcretarget.qp import (
    EPS_REG,
    INFEASIBLE,
    OPTIMAL,
    QpProblem,
    dump_problem,
    kkt_residuals,
    solve_qp,
    weighted_least_squares_to_qp,
)


def brute_force_qp(problem, tol=1e-9):
    """Enumerate inequality active sets, solve each KKT equality system,
    keep the feasible candidate with the smallest objective."""
    P, r = problem.P, problem.r
    Aeq, beq = problem.Aeq, problem.beq
    Ain, bin_ = problem.Aineq, problem.bineq
    d, meq, mineq = problem.dim, Aeq.shape[0], Ain.shape[0]
    best_x, best_obj = None, np.inf
    for k in range(mineq + 1):
        for subset in itertools.combinations(range(mineq), k):
            A = np.vstack([Aeq] + [Ain[list(subset)]]) if subset else Aeq
            b = np.concatenate([beq] + [bin_[list(subset)]]) if subset else beq
            m = A.shape[0]
            K = np.zeros((d + m, d + m))
            K[:d, :d] = P
            K[:d, d:] = A.T
            K[d:, :d] = A
            rhs = np.concatenate([-r, -b])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x = sol[:d]
            if mineq and np.min(Ain @ x + bin_) < -1e-8:
                continue
            if meq and np.max(np.abs(Aeq @ x + beq)) > 1e-8:
                continue
            obj = problem.objective(x)
            if obj < best_obj - tol:
                best_obj, best_x = obj, x
    return best_x, best_obj


def random_problem(rng, d=None, meq=None, mineq=None):
    d = d if d is not None else int(rng.integers(1, 9))
    meq = meq if meq is not None else int(rng.integers(0, min(3, d)))
    mineq = mineq if mineq is not None else int(rng.integers(0, 7))
    M = rng.normal(size=(d, d))
    P = M @ M.T + (0.3 + rng.uniform()) * np.eye(d)
    r = rng.normal(size=d) * 2.0
    x0 = rng.normal(size=d)  # guaranteed-feasible point
    Aeq = rng.normal(size=(meq, d))
    beq = -Aeq @ x0
    Ain = rng.normal(size=(mineq, d))
    bin_ = -Ain @ x0 + rng.uniform(0.0, 1.0, size=mineq)
    return QpProblem(P, r, Aeq, beq, Ain, bin_)


def test_unconstrained_minimum_is_zero():
    problem = QpProblem(np.eye(3), np.zeros(3), np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3)), np.zeros(0))
    sol = solve_qp(problem)
    assert sol.status == OPTIMAL
    assert np.allclose(sol.x, 0)
    assert sol.active_inequalities == ()


def test_clipped_scalar_bound():
    # min (x-2)^2 s.t. x <= 1  ->  x = 1, constraint active
    problem = QpProblem(
        np.array([[2.0]]), np.array([-4.0]),
        np.zeros((0, 1)), np.zeros(0),
        np.array([[-1.0]]), np.array([1.0]),
    )
    sol = solve_qp(problem)
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(1.0, abs=1e-12)
    assert sol.active_inequalities == (0,)
    assert sol.ineq_multipliers[0] > 0


def test_equality_only():
    rng = np.random.default_rng(21)
    for _ in range(20):
        problem = random_problem(rng, mineq=0)
        sol = solve_qp(problem)
        assert sol.status == OPTIMAL
        if problem.Aeq.shape[0]:
            assert np.max(np.abs(problem.Aeq @ sol.x + problem.beq)) < 1e-9 * (
                1 + np.linalg.norm(problem.beq)
            )


def test_matches_brute_force_enumeration():
    rng = np.random.default_rng(22)
    for _ in range(200):
        problem = random_problem(rng)
        sol = solve_qp(problem)
        assert sol.status == OPTIMAL
        x_ref, obj_ref = brute_force_qp(problem)
        assert x_ref is not None
        assert np.linalg.norm(sol.x - x_ref, np.inf) < 1e-7
        assert abs(problem.objective(sol.x) - obj_ref) < 1e-7


def test_kkt_certificate_on_random_problems():
    rng = np.random.default_rng(23)
    for _ in range(100):
        problem = random_problem(rng)
        sol = solve_qp(problem)
        assert sol.status == OPTIMAL
        kkt = kkt_residuals(problem, sol)
        assert kkt["stationarity"] <= 1e-7 * (1 + np.linalg.norm(problem.r))
        assert kkt["equality"] <= 1e-9 * (1 + np.linalg.norm(problem.beq))
        assert kkt["active_slack"] <= 1e-9
        assert kkt["min_slack"] >= -1e-9
        assert kkt["min_multiplier"] >= -1e-9


def test_adding_inequality_never_improves_objective():
    rng = np.random.default_rng(24)
    for _ in range(50):
        problem = random_problem(rng, mineq=4)
        base = solve_qp(
            QpProblem(problem.P, problem.r, problem.Aeq, problem.beq,
                      problem.Aineq[:3], problem.bineq[:3])
        )
        full = solve_qp(problem)
        assert full.status == OPTIMAL and base.status == OPTIMAL
        assert problem.objective(full.x) >= problem.objective(base.x) - 1e-9


def test_cold_solves_are_bitwise_identical():
    rng = np.random.default_rng(25)
    problem = random_problem(rng, d=6, meq=2, mineq=5)
    a = solve_qp(problem)
    b = solve_qp(problem)
    assert np.array_equal(a.x, b.x)
    assert a.active_inequalities == b.active_inequalities
    assert a.iterations == b.iterations


def test_infeasible_inequalities_detected():
    # x >= 1 and -x >= 1 cannot hold together
    problem = QpProblem(
        np.eye(1), np.zeros(1), np.zeros((0, 1)), np.zeros(0),
        np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]),
    )
    sol = solve_qp(problem)
    assert sol.status == INFEASIBLE


def test_inconsistent_equalities_detected():
    problem = QpProblem(
        np.eye(2), np.zeros(2),
        np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([0.0, -1.0]),
        np.zeros((0, 2)), np.zeros(0),
    )
    sol = solve_qp(problem)
    assert sol.status == INFEASIBLE


def test_weighted_least_squares_stacking():
    # single block C=I, c=v, w=1: P = (1+eps) I, r = -v
    v = np.array([1.0, -2.0, 0.5])
    P, r = weighted_least_squares_to_qp([(np.eye(3), v, 1.0)])
    assert np.allclose(P, (1 + EPS_REG) * np.eye(3))
    assert np.allclose(r, -v)
    # two identical blocks double P and r (up to the regularization)
    P2, r2 = weighted_least_squares_to_qp([(np.eye(3), v, 1.0), (np.eye(3), v, 1.0)])
    assert np.allclose(P2 - EPS_REG * np.eye(3), 2 * (P - EPS_REG * np.eye(3)))
    assert np.allclose(r2, 2 * r)


def test_weighted_least_squares_matches_direct_evaluation():
    rng = np.random.default_rng(26)
    for _ in range(30):
        dim = int(rng.integers(2, 6))
        blocks = []
        for _ in range(int(rng.integers(1, 4))):
            rows = int(rng.integers(1, 5))
            blocks.append(
                (rng.normal(size=(rows, dim)), rng.normal(size=rows), rng.uniform(0.1, 5.0, size=rows))
            )
        P, r = weighted_least_squares_to_qp(blocks, eps_reg=0.0)
        for _ in range(5):
            x = rng.normal(size=dim)
            direct = sum(0.5 * np.sum(w * (C @ x - c) ** 2) for C, c, w in blocks)
            quad = 0.5 * x @ P @ x + r @ x
            const = sum(0.5 * np.sum(w * c**2) for C, c, w in blocks)
            assert abs(quad + const - direct) < 1e-10 * (1 + abs(direct))


def test_weighted_least_squares_dimension_mismatch():
    with pytest.raises(ValueError, match="block shape"):
        weighted_least_squares_to_qp([(np.eye(3), np.zeros(2), 1.0)])


def test_dump_problem_round_trips_values(tmp_path):
    rng = np.random.default_rng(27)
    problem = random_problem(rng, d=3, meq=1, mineq=2)
    path = tmp_path / "problem.txt"
    dump_problem(problem, path)
    text = path.read_text()
    assert "dim 3 meq 1 mineq 2" in text
    assert repr(float(problem.P[0, 0])) in text

import copy

import numpy as np
import pytest

from mcretarget.contacts import ContactSet
from mcretarget.geometry import Pose
from mcretarget.model import BasePose, GeneralizedPosition, load_model, load_model_file
from mcretarget.retarget import (
    RetargetEngine,
    RetargetState,
    TaskTargets,
    WeightSet,
    initialize_state,
)
from mcretarget.statics import contact_anchor_from_pose
from mcretarget.kinematics import KinematicsCache, forward_kinematics
from mcretarget.verify import is_feasible, state_checks

from conftest import ASSETS


@pytest.fixture(scope="module")
def biped_engine(biped):
    engine = RetargetEngine(biped)
    state, targets = initialize_state(engine)
    return engine, state, targets


def test_problem_dimensions_match_counts(biped_engine):
    engine, state, targets = biped_engine
    n = engine.model.n
    planes, points = state.contacts.counts()
    asm = engine.assemble(state, targets)
    assert asm.problem.dim == 6 + n + 6 * planes + 3 * points
    assert asm.problem.Aeq.shape[0] == 6 + 6 * planes + 3 * points
    assert asm.problem.Aineq.shape[0] == 4 * n + 18 * planes + 6 * points


def test_dimension_formula_across_models():
    for fname in ("biped.urdf", "biped_large.urdf", "quadruped.urdf", "quadruped_arm.urdf"):
        model = load_model_file(ASSETS / fname)
        engine = RetargetEngine(model)
        state, targets = initialize_state(engine)
        planes, points = state.contacts.counts()
        asm = engine.assemble(state, targets)
        n = model.n
        assert asm.problem.dim == 6 + n + 6 * planes + 3 * points
        assert asm.problem.Aeq.shape[0] == 6 + 6 * planes + 3 * points
        assert asm.problem.Aineq.shape[0] == 4 * n + 18 * planes + 6 * points


def test_fixed_point_and_quiescence(biped_engine):
    engine, state, targets = biped_engine
    state = state.copy()
    for _ in range(50):
        state, report = engine.step(state, targets)
    assert report.dx_norm <= 1e-9
    assert report.equilibrium_residual <= 1e-6


def test_eliminate_torques_zero_increment(biped_engine):
    engine, state, _ = biped_engine
    T, t = engine.eliminate_torques(state)
    # at zero increment the torque rows reproduce G_J - J_J^T lambda
    assert np.allclose(t, state.tau, atol=1e-6)


def test_eliminate_torques_substitution_residual(biped_engine):
    engine, state, _ = biped_engine
    rng = np.random.default_rng(41)
    cache = state.ensure_cache(engine.model)
    A, b = engine._equilibrium_rows(cache, state)
    T, t = engine.eliminate_torques(state)
    n = engine.model.n
    for _ in range(10):
        dx = rng.normal(size=A.shape[1]) * 1e-2
        tau_new = T @ dx + t
        # joint rows of the differentiated equilibrium with tau eliminated
        residual = A[6:] @ dx + b[6:] - tau_new
        assert np.linalg.norm(residual, np.inf) < 1e-9


def test_pendulum_torque_elimination():
    doc = """
<robot name=\"pendulum\">
  <link name=\"base\"><inertial><mass value=\"0\"/></inertial></link>
  <link name=\"rod\"><inertial><origin xyz=\"0 0 -0.5\"/><mass value=\"1.0\"/></inertial></link>
  <joint name=\"pivot\" type=\"revolute\">
    <origin xyz=\"0 0 0\"/>
    <parent link=\"base\"/><child link=\"rod\"/>
    <axis xyz=\"0 1 0\"/>
    <limit lower=\"-3.2\" upper=\"3.2\" effort=\"50\" velocity=\"10\"/>
  </joint>
</robot>
"""
    model = load_model(doc)
    engine = RetargetEngine(model)
    theta = 0.7
    state = RetargetState(
        GeneralizedPosition(BasePose(), np.array([theta])), np.zeros(1), ContactSet.from_model(model)
    )
    T, t = engine.eliminate_torques(state)
    assert t[0] == pytest.approx(9.81 * 0.5 * np.sin(theta), abs=1e-9)


def test_step_raises_on_unknown_effector_target(biped_engine):
    engine, state, targets = biped_engine
    targets = targets.copy()
    targets.effector_poses["nope"] = Pose.identity()
    with pytest.raises(Exception, match="unknown"):
        engine.step(state.copy(), targets)


def test_ramp_tracking_keeps_residuals_small(biped_engine):
    engine, state, targets = biped_engine
    state = state.copy()
    targets = targets.copy()
    hand0 = targets.effector_poses["hand_l"].copy()
    for k in range(400):
        targets.effector_poses["hand_l"].position = hand0.position + np.array(
            [0.0002 * (k + 1), 0.0, 0.0]
        )
        state, report = engine.step(state, targets)
        assert report.equilibrium_residual < 0.01
        assert max(v[0] for v in report.kinematic_residuals.values()) < 1e-3
    hand = forward_kinematics(engine.model, state.q, "hand_l").position
    assert hand[0] > hand0.position[0] + 0.05  # actually moved


def test_far_reach_saturates_cop_and_stays_feasible(biped_engine):
    from mcretarget.contacts import cop_of_wrench

    engine, state, targets = biped_engine
    state = state.copy()
    targets = targets.copy()
    hand0 = targets.effector_poses["hand_l"].copy()
    saturated = False
    for k in range(1500):
        targets.effector_poses["hand_l"].position = hand0.position + np.array(
            [0.001 * (k + 1), 0.0, 0.0]
        )
        state, report = engine.step(state, targets)
        checks = state_checks(engine.model, state.q, state.tau, state.contacts, state.wrenches)
        assert is_feasible(checks)
        if any(cat == "cop" for cat, _ in report.saturations):
            saturated = True
    assert saturated
    copx = cop_of_wrench(state.wrenches["foot_l"])[0]
    assert copx == pytest.approx(0.11, abs=0.002)
    # the effector stalls: commanded far beyond where the hand stopped
    hand = forward_kinematics(engine.model, state.q, "hand_l").position
    assert targets.effector_poses["hand_l"].position[0] - hand[0] > 0.3


def test_converge_oracle_iteration_counts(biped_engine):
    engine, state, targets = biped_engine
    state = state.copy()
    settled, iters, report = engine.converge_on_frozen_problem(state, targets, max_iters=50)
    assert iters == 1  # already converged
    # 10 cm hand jump: converges to sub-mm task error
    targets = targets.copy()
    targets.effector_poses["hand_l"] = Pose(
        targets.effector_poses["hand_l"].rotation,
        targets.effector_poses["hand_l"].position + np.array([0.0, 0.0, 0.10]),
    )
    settled, iters, report = engine.converge_on_frozen_problem(settled, targets, max_iters=3000)
    assert iters > 1
    hand = forward_kinematics(engine.model, settled.q, "hand_l").position
    assert np.linalg.norm(hand - targets.effector_poses["hand_l"].position) < 1e-3
    assert report.equilibrium_residual < 0.01


def test_switch_removal_success_and_force_transfer(biped):
    weights = WeightSet()
    weights.alpha = 1.05  # fast schedule for the unit test
    engine = RetargetEngine(biped, weights)
    state, _ = initialize_state(engine)
    total_weight = biped.total_mass * 9.81
    clone = state.copy()
    targets = engine.hold_targets(clone)
    targets.wrench_targets = {}
    clone.contacts.entry("foot_l").start_remove(weights.contact_enabled)
    prev_norm, event = np.inf, "in_progress"
    while event == "in_progress":
        entry = clone.contacts.entry("foot_l")
        norm = float(np.linalg.norm(clone.wrench_of("foot_l")))
        event = entry.switching_step(
            weights.alpha, weights.contact_enabled, weights.contact_disabled, norm
        )
        if event != "in_progress":
            break
        clone, report = engine.step(clone, targets)
    assert event == "removed"
    assert clone.contacts.entry("foot_l").state.mode == "disabled"
    # remaining foot carries the whole weight
    assert clone.wrenches["foot_r"][5] == pytest.approx(total_weight, rel=0.01)


def test_switch_removal_failure_reported(assets_dir):
    model = load_model_file(assets_dir / "quadruped.urdf")
    weights = WeightSet()
    weights.alpha = 1.05
    engine = RetargetEngine(model, weights)
    state, _ = initialize_state(engine)
    # no postural preparation: the center of mass sits on the edge of the
    # remaining triangle, the wrench cannot vanish
    result = engine.offline_switch_feasibility(state, "foot_rh")
    assert result == {"feasible": False, "duration_ticks": 236}
    assert state.contacts.entry("foot_rh").state.mode == "enabled"


def test_offline_check_leaves_state_untouched(biped):
    weights = WeightSet()
    weights.alpha = 1.05
    engine = RetargetEngine(biped, weights)
    state, _ = initialize_state(engine)
    q_before = state.q.joints.copy()
    result = engine.offline_switch_feasibility(state, "foot_l")
    assert result["feasible"] is True
    assert result["duration_ticks"] == 236
    assert np.array_equal(state.q.joints, q_before)
    assert state.contacts.entry("foot_l").state.mode == "enabled"


def test_contact_addition_redistributes_force(biped):
    weights = WeightSet()
    weights.alpha = 1.05
    engine = RetargetEngine(biped, weights)
    state, _ = initialize_state(engine)
    # park the left hand on a virtual surface below it and add the contact
    cache = state.ensure_cache(biped)
    hand_pose = cache.effector_pose("hand_l")
    entry = state.contacts.entry("hand_l")
    entry.start_add(
        contact_anchor_from_pose(entry.spec, hand_pose), weights.contact_disabled
    )
    state.wrenches["hand_l"] = np.zeros(3)
    targets = engine.hold_targets(state)
    targets.wrench_targets = {}
    event = "in_progress"
    while event == "in_progress":
        entry = state.contacts.entry("hand_l")  # step returns copies
        event = entry.switching_step(
            weights.alpha, weights.contact_enabled, weights.contact_disabled, 0.0
        )
        if event != "in_progress":
            break
        state, report = engine.step(state, targets)
    assert event == "added"
    assert state.contacts.entry("hand_l").state.mode == "enabled"
    # once enabled, the next step enforces the full min-normal row
    state, report = engine.step(state, targets)
    assert state.wrenches["hand_l"][2] > entry.spec.min_normal - 1e-6
    checks = state_checks(biped, state.q, state.tau, state.contacts, state.wrenches)
    assert is_feasible(checks)


def test_force_target_is_tracked_on_enabled_contact(biped):
    weights = WeightSet()
    weights.alpha = 1.05
    engine = RetargetEngine(biped, weights)
    state, _ = initialize_state(engine)
    cache = state.ensure_cache(biped)
    entry = state.contacts.entry("hand_l")
    entry.force_enable(
        contact_anchor_from_pose(entry.spec, cache.effector_pose("hand_l")),
        weights.contact_enabled,
    )
    state.wrenches["hand_l"] = np.zeros(3)
    targets = engine.hold_targets(state)
    targets.wrench_targets = {"hand_l": np.array([0.0, 0.0, 3.0])}
    targets.weight_overrides = {"hand_l": 1e4}
    state, _, _ = engine.converge_on_frozen_problem(state, targets, max_iters=2000)
    assert state.wrenches["hand_l"][2] == pytest.approx(3.0, abs=0.05)
    checks = state_checks(biped, state.q, state.tau, state.contacts, state.wrenches)
    assert is_feasible(checks)


def test_weightset_file_round_trip(tmp_path):
    ws = WeightSet()
    ws.orientation = 25.0
    ws.alpha = 1.02
    path = tmp_path / "weights.cfg"
    ws.to_file(path)
    loaded = WeightSet.from_file(path)
    assert loaded.orientation == 25.0
    assert loaded.alpha == 1.02
    assert np.array_equal(loaded.contact_pattern_plane, ws.contact_pattern_plane)
    path.write_text("bogus_key = 3\n")
    with pytest.raises(ValueError, match="unknown weight"):
        WeightSet.from_file(path)


def test_weightset_validation():
    ws = WeightSet()
    ws.alpha = 0.9
    with pytest.raises(ValueError, match="alpha"):
        ws.validate()


def test_huge_target_jump_is_clamp_bounded(biped_engine):
    # a 5 m commanded jump must not destabilize anything: the clamped
    # task residuals bound the per-tick motion
    engine, state, targets = biped_engine
    state = state.copy()
    targets = targets.copy()
    targets.effector_poses["hand_l"] = Pose(
        targets.effector_poses["hand_l"].rotation,
        targets.effector_poses["hand_l"].position + np.array([5.0, 0.0, 0.0]),
    )
    prev = forward_kinematics(engine.model, state.q, "hand_l").position
    for _ in range(30):
        state, report = engine.step(state, targets)
        now = forward_kinematics(engine.model, state.q, "hand_l").position
        step_len = np.linalg.norm(now - prev)
        prev = now
        # clamp_position = 0.01 m bounds the pose-task pull per tick
        assert step_len <= 0.011
        assert report.equilibrium_residual < 0.01
        checks = state_checks(engine.model, state.q, state.tau, state.contacts, state.wrenches)
        assert is_feasible(checks)


def test_removal_wrench_is_monotone_after_transient(biped):
    weights = WeightSet()
    weights.alpha = 1.05
    engine = RetargetEngine(biped, weights)
    state, _ = initialize_state(engine)
    targets = engine.hold_targets(state)
    targets.wrench_targets = {}
    state.contacts.entry("foot_l").start_remove(weights.contact_enabled)
    norms = []
    event = "in_progress"
    while event == "in_progress":
        entry = state.contacts.entry("foot_l")
        norm = float(np.linalg.norm(state.wrench_of("foot_l")))
        norms.append(norm)
        event = entry.switching_step(
            weights.alpha, weights.contact_enabled, weights.contact_disabled, norm
        )
        if event != "in_progress":
            break
        state, _ = engine.step(state, targets)
    assert event == "removed"
    diffs = np.diff(np.array(norms[25:]))  # after the initial transient
    assert float(diffs.max()) <= 1e-2  # non-increasing within tolerance

import numpy as np
import pytest

from mcretarget.geometry import (
    Pose,
    clamp_norm,
    clamp_vector,
    matrix_to_quat,
    pose_difference,
    pose_step,
    quat_to_matrix,
    rotation_exp,
    rotation_log,
)


def test_exp_log_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(200):
        w = rng.normal(size=3) * rng.uniform(0, 3)
        if np.linalg.norm(w) > np.pi - 1e-3:
            w *= (np.pi - 1e-3) / np.linalg.norm(w)
        R = rotation_exp(w)
        assert np.allclose(rotation_log(R), w, atol=1e-9)


def test_rotation_matrices_orthonormal():
    rng = np.random.default_rng(1)
    for _ in range(50):
        R = rotation_exp(rng.normal(size=3))
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_log_near_pi_is_deterministic():
    axis = np.array([1.0, 0.0, 0.0])
    R = rotation_exp(axis * np.pi)
    w1 = rotation_log(R)
    w2 = rotation_log(R.copy())
    assert np.array_equal(w1, w2)
    assert np.linalg.norm(w1) == pytest.approx(np.pi, abs=1e-7)
    # returned axis has positive first nonzero component
    first = w1[np.nonzero(np.abs(w1) > 1e-9)[0][0]]
    assert first > 0


def test_quat_matrix_round_trip():
    rng = np.random.default_rng(2)
    for _ in range(100):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        if q[0] < 0:
            q = -q
        R = quat_to_matrix(q)
        assert np.allclose(matrix_to_quat(R), q, atol=1e-9)


def test_pose_difference_zero_and_translation():
    a = Pose.from_rpy([0.3, -0.1, 0.2], [0.1, 0.4, -0.3])
    assert np.allclose(pose_difference(a, a), np.zeros(6))
    b = a.copy()
    b.position = a.position - np.array([0.1, 0.0, 0.0])
    assert np.allclose(pose_difference(a, b), [0, 0, 0, 0.1, 0, 0])


def test_pose_difference_pure_rotation():
    a = Pose(rotation_exp(np.array([0.0, 0.0, 0.3])), np.zeros(3))
    b = Pose.identity()
    assert np.allclose(pose_difference(a, b), [0, 0, 0.3, 0, 0, 0], atol=1e-12)


def test_pose_difference_antisymmetric():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = Pose(rotation_exp(rng.normal(size=3) * 0.8), rng.normal(size=3))
        b = Pose(rotation_exp(rng.normal(size=3) * 0.8), rng.normal(size=3))
        assert np.allclose(pose_difference(a, b), -pose_difference(b, a), atol=1e-9)


def test_pose_step_closes_difference():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = Pose(rotation_exp(rng.normal(size=3)), rng.normal(size=3))
        b = Pose(rotation_exp(rng.normal(size=3) * 0.4), rng.normal(size=3))
        stepped = pose_step(b, pose_difference(a, b))
        assert np.allclose(pose_difference(a, stepped), np.zeros(6), atol=1e-9)


def test_clamps():
    assert np.allclose(clamp_vector(np.array([0.5, -2.0, 0.0]), 1.0), [0.5, -1.0, 0.0])
    v = np.array([3.0, 4.0, 0.0])
    c = clamp_norm(v, 1.0)
    assert np.linalg.norm(c) == pytest.approx(1.0)
    assert np.allclose(c * 5.0, v)
    assert np.array_equal(clamp_norm(v, 10.0), v)

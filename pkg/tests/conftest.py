from pathlib import Path

import numpy as np
import pytest

from mcretarget.contacts import ContactSet, ContactSpec, PLANE, POINT
from mcretarget.geometry import Pose
from mcretarget.kinematics import KinematicsCache, integrate_configuration
from mcretarget.model import BasePose, Body, GeneralizedPosition, Joint, RobotModel, load_model_file
from mcretarget.statics import contact_anchor_from_pose

ASSETS = Path(__file__).resolve().parents[1] / "src" / "mcretarget" / "assets"


@pytest.fixture(scope="session")
def biped():
    return load_model_file(ASSETS / "biped.urdf")


@pytest.fixture(scope="session")
def assets_dir():
    return ASSETS


def random_tree_model(rng, n_joints=6, prismatic_prob=0.2):
    """Random floating-base kinematic tree for derivative sweeps."""
    bodies = [Body(name="base", index=0, mass=float(rng.uniform(0.5, 4.0)), com=rng.uniform(-0.2, 0.2, 3))]
    joints = []
    for k in range(n_joints):
        parent = int(rng.integers(0, len(bodies)))
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        jtype = "prismatic" if rng.random() < prismatic_prob else "revolute"
        origin = Pose.from_rpy(rng.uniform(-0.4, 0.4, 3), rng.uniform(-0.8, 0.8, 3))
        body = Body(
            name=f"body{k + 1}",
            index=len(bodies),
            mass=float(rng.uniform(0.2, 3.0)),
            com=rng.uniform(-0.2, 0.2, 3),
        )
        joint = Joint(
            name=f"j{k}",
            index=k,
            jtype=jtype,
            parent=parent,
            child=body.index,
            origin=origin,
            axis=axis,
            lower=-2.5,
            upper=2.5,
            velocity_limit=10.0,
            effort_limit=100.0,
            dof=k,
        )
        body.parent_joint = k
        bodies.append(body)
        joints.append(joint)
    from mcretarget.model import EndEffector

    effectors = [EndEffector(name="tip", body=len(bodies) - 1, offset=Pose.from_rpy(rng.uniform(-0.2, 0.2, 3), np.zeros(3)))]
    return RobotModel("random", bodies, joints, effectors)


def random_configuration(rng, model):
    quat = rng.normal(size=4)
    quat /= np.linalg.norm(quat)
    if quat[0] < 0:
        quat = -quat
    return GeneralizedPosition(
        BasePose(quat, rng.uniform(-1, 1, 3)),
        rng.uniform(-1.0, 1.0, model.n),
    )


def attach_random_contacts(rng, model):
    """Give the model's effectors contact specs and an anchored ContactSet."""
    entries = []
    spec = ContactSpec(
        effector="tip",
        kind=PLANE if rng.random() < 0.5 else POINT,
        half_length_x=0.1,
        half_length_y=0.06,
        friction=0.6,
        min_normal=0.0,
        max_normal=1e4,
        surface_normal=np.array([0.0, 0.0, 1.0]),
    )
    model.end_effectors[0].contact = spec
    contacts = ContactSet.from_model(model)
    return contacts


def fd_columns(func, q, nv, eps=1e-6):
    """Central finite differences of func(q) against tangent columns."""
    cols = []
    for j in range(nv):
        delta = np.zeros(nv)
        delta[j] = eps
        plus = func(integrate_configuration(q, delta))
        minus = func(integrate_configuration(q, -delta))
        cols.append((plus - minus) / (2 * eps))
    return np.stack(cols, axis=-1)


def rel_error(a, b):
    return np.linalg.norm(a - b) / (1.0 + np.linalg.norm(b))

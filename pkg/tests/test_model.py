import numpy as np
import pytest

from mcretarget.model import ModelError, load_model

MINIMAL = """
<robot name="box">
  <link name="base">
    <inertial>
      <origin xyz="0 0 0.1"/>
      <mass value="2.5"/>
      <inertia ixx="0.01" iyy="0.01" izz="0.01"/>
    </inertial>
  </link>
</robot>
"""

TWO_LINK = """
<robot name="arm">
  <link name="base">
    <inertial><mass value="1.0"/></inertial>
  </link>
  <link name="upper">
    <inertial><origin xyz="0 0 0.5"/><mass value="1.0"/></inertial>
  </link>
  <link name="lower">
    <inertial><origin xyz="0 0 0.5"/><mass value="1.0"/></inertial>
  </link>
  <joint name="shoulder" type="revolute">
    <origin xyz="0 0 0"/>
    <parent link="base"/>
    <child link="upper"/>
    <axis xyz="1 0 0"/>
    <limit lower="-3" upper="3" effort="50" velocity="10"/>
  </joint>
  <joint name="elbow" type="revolute">
    <origin xyz="0 0 1"/>
    <parent link="upper"/>
    <child link="lower"/>
    <axis xyz="1 0 0"/>
    <limit lower="-3" upper="3" effort="50" velocity="10"/>
  </joint>
  <end_effector name="tip" link="lower">
    <origin xyz="0 0 1"/>
  </end_effector>
</robot>
"""


def test_single_floating_body():
    model = load_model(MINIMAL)
    assert model.n == 0
    assert len(model.bodies) == 1
    assert model.total_mass == pytest.approx(2.5)


def test_two_link_chain():
    model = load_model(TWO_LINK)
    assert model.n == 2
    assert [j.name for j in model.actuated_joints()] == ["shoulder", "elbow"]
    assert model.effector("tip").body == model.body("lower").index


def test_bundled_biped_counts(biped):
    assert biped.n == 18
    planes = [e for e in biped.end_effectors if e.contact and e.contact.kind == "plane"]
    points = [e for e in biped.end_effectors if e.contact and e.contact.kind == "point"]
    assert len(planes) == 2 and len(points) == 2
    assert all(e.contact.initial_enabled for e in planes)
    low, high = biped.joint_limits()
    assert np.all(low < high)
    assert np.all(biped.effort_limits() > 0)


def test_document_order_is_preserved(biped):
    names = [j.name for j in biped.actuated_joints()]
    assert names[0] == "hip_yaw_l"
    assert names.index("hip_roll_l") < names.index("hip_roll_r") < names.index("shoulder_pitch_l")


def test_kinematic_loop_rejected():
    doc = TWO_LINK.replace(
        '<end_effector name="tip" link="lower">\n    <origin xyz="0 0 1"/>\n  </end_effector>',
        """
  <joint name="loop" type="revolute">
    <origin xyz="0 0 0"/>
    <parent link="lower"/>
    <child link="base"/>
    <axis xyz="1 0 0"/>
    <limit lower="-1" upper="1" effort="1" velocity="1"/>
  </joint>
""",
    )
    with pytest.raises(ModelError, match="parent joint|loop|root"):
        load_model(doc)


def test_missing_limit_rejected():
    doc = TWO_LINK.replace(
        '<limit lower="-3" upper="3" effort="50" velocity="10"/>\n  </joint>\n  <joint name="elbow"',
        "</joint>\n  <joint name=\"elbow\"",
        1,
    )
    with pytest.raises(ModelError, match="missing <limit>"):
        load_model(doc)


def test_unsupported_elements_are_hard_errors():
    doc = MINIMAL.replace("<inertial>", "<visual/><inertial>")
    with pytest.raises(ModelError, match="unsupported element"):
        load_model(doc)
    doc = MINIMAL.replace("</robot>", "<gazebo/></robot>")
    with pytest.raises(ModelError, match="unsupported element"):
        load_model(doc)


def test_non_unit_axis_rejected():
    doc = TWO_LINK.replace('<axis xyz="1 0 0"/>', '<axis xyz="2 0 0"/>', 1)
    with pytest.raises(ModelError, match="unit-norm"):
        load_model(doc)


def test_two_roots_rejected():
    doc = MINIMAL.replace("</robot>", '<link name="orphan"/></robot>')
    with pytest.raises(ModelError, match="exactly one root"):
        load_model(doc)


def test_xml_error_carries_line():
    with pytest.raises(ModelError, match="line"):
        load_model("<robot><link name='x'></robot>")


def test_inertia_parsed_but_statics_ignore_it():
    model = load_model(MINIMAL)
    assert model.bodies[0].inertia[0, 0] == pytest.approx(0.01)


def test_nominal_posture_roundtrip(biped):
    names = {j.name: j.dof for j in biped.actuated_joints()}
    assert biped.nominal_posture[names["knee_l"]] == pytest.approx(0.6)
    assert biped.nominal_posture[names["hip_yaw_l"]] == 0.0

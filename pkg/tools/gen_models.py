#!/usr/bin/env python3
"""Regenerate the bundled robot model files under src/mcretarget/assets/."""

from pathlib import Path

ASSETS = Path(__file__).resolve().parents[1] / "src" / "mcretarget" / "assets"


def link(name, mass, com, inertia=None):
    i = inertia if inertia is not None else max(mass * 0.01, 1e-4)
    return f"""  <link name="{name}">
    <inertial>
      <origin xyz="{com[0]} {com[1]} {com[2]}" rpy="0 0 0"/>
      <mass value="{mass}"/>
      <inertia ixx="{i}" ixy="0" ixz="0" iyy="{i}" iyz="0" izz="{i}"/>
    </inertial>
  </link>
"""


def joint(name, jtype, parent, child, origin, axis=None, limits=None):
    out = f"""  <joint name="{name}" type="{jtype}">
    <origin xyz="{origin[0]} {origin[1]} {origin[2]}" rpy="0 0 0"/>
    <parent link="{parent}"/>
    <child link="{child}"/>
"""
    if jtype != "fixed":
        lo, hi, eff, vel = limits
        out += f"""    <axis xyz="{axis[0]} {axis[1]} {axis[2]}"/>
    <limit lower="{lo}" upper="{hi}" effort="{eff}" velocity="{vel}"/>
"""
    return out + "  </joint>\n"


def plane_ee(name, link_name, offset, lx=0.11, ly=0.07, mu=0.5, fmin=2, fmax=800, initial="enabled"):
    return f"""  <end_effector name="{name}" link="{link_name}">
    <origin xyz="{offset[0]} {offset[1]} {offset[2]}" rpy="0 0 0"/>
    <contact kind="plane" half_length_x="{lx}" half_length_y="{ly}" friction="{mu}"
             min_normal="{fmin}" max_normal="{fmax}" initial="{initial}"/>
  </end_effector>
"""


def point_ee(name, link_name, offset, mu=0.5, fmin=0.5, fmax=200, normal="0 0 1", initial="disabled"):
    return f"""  <end_effector name="{name}" link="{link_name}">
    <origin xyz="{offset[0]} {offset[1]} {offset[2]}" rpy="0 0 0"/>
    <contact kind="point" friction="{mu}" min_normal="{fmin}" max_normal="{fmax}"
             surface_normal="{normal}" initial="{initial}"/>
  </end_effector>
"""


def posture(values):
    rows = "".join(f'    <joint name="{k}" value="{v}"/>\n' for k, v in values.items())
    return f"  <nominal_posture>\n{rows}  </nominal_posture>\n"


def biped_leg(side, sign, long_arms=False):
    s, g = side, sign
    out = ""
    out += link(f"yaw_{s}", 0.08, (0, 0, -0.02))
    out += link(f"hip_{s}", 0.10, (0, 0, -0.02))
    out += link(f"thigh_{s}", 0.35, (0, 0, -0.15))
    out += link(f"shin_{s}", 0.25, (0, 0, -0.14))
    out += link(f"ankle_{s}", 0.05, (0, 0, -0.02))
    out += link(f"foot_{s}", 0.17, (0.02, 0, -0.03))
    out += joint(f"hip_yaw_{s}", "revolute", "pelvis", f"yaw_{s}", (0, g * 0.065, -0.02),
                 (0, 0, 1), (-1.0, 1.0, 120, 10))
    out += joint(f"hip_roll_{s}", "revolute", f"yaw_{s}", f"hip_{s}", (0, 0, -0.04),
                 (1, 0, 0), (-0.8, 0.8, 150, 10))
    out += joint(f"hip_pitch_{s}", "revolute", f"hip_{s}", f"thigh_{s}", (0, 0, -0.04),
                 (0, 1, 0), (-1.8, 1.2, 150, 10))
    out += joint(f"knee_{s}", "revolute", f"thigh_{s}", f"shin_{s}", (0, 0, -0.30),
                 (0, 1, 0), (-0.05, 2.4, 150, 10))
    out += joint(f"ankle_pitch_{s}", "revolute", f"shin_{s}", f"ankle_{s}", (0, 0, -0.30),
                 (0, 1, 0), (-1.2, 1.2, 100, 10))
    out += joint(f"ankle_roll_{s}", "revolute", f"ankle_{s}", f"foot_{s}", (0, 0, -0.03),
                 (1, 0, 0), (-0.6, 0.6, 100, 10))
    out += plane_ee(f"foot_{s}", f"foot_{s}", (0.0, 0, -0.06))
    return out


def biped_arm(side, sign, long_version=False):
    s, g = side, sign
    out = ""
    out += link(f"shoulder_{s}", 0.08, (0, g * 0.03, 0))
    out += link(f"upperarm_{s}", 0.17, (0, 0, -0.13))
    out += joint(f"shoulder_pitch_{s}", "revolute", "torso", f"shoulder_{s}", (0, g * 0.18, 0.26),
                 (0, 1, 0), (-2.6, 1.6, 60, 10))
    roll_lim = (-0.4, 1.8, 60, 10) if s == "l" else (-1.8, 0.4, 60, 10)
    out += joint(f"shoulder_roll_{s}", "revolute", f"shoulder_{s}", f"upperarm_{s}", (0, g * 0.05, 0),
                 (1, 0, 0), roll_lim)
    if long_version:
        out += link(f"upperarm2_{s}", 0.07, (0, 0, -0.05))
        out += link(f"forearm_{s}", 0.12, (0, 0, -0.12))
        out += link(f"wrist_{s}", 0.04, (0, 0, -0.02))
        out += link(f"hand_{s}", 0.06, (0, 0, -0.04))
        out += joint(f"shoulder_yaw_{s}", "revolute", f"upperarm_{s}", f"upperarm2_{s}", (0, 0, -0.14),
                     (0, 0, 1), (-1.6, 1.6, 40, 10))
        out += joint(f"elbow_{s}", "revolute", f"upperarm2_{s}", f"forearm_{s}", (0, 0, -0.12),
                     (0, 1, 0), (-2.4, 0.05, 40, 10))
        out += joint(f"wrist_pitch_{s}", "revolute", f"forearm_{s}", f"wrist_{s}", (0, 0, -0.22),
                     (0, 1, 0), (-1.2, 1.2, 20, 10))
        out += joint(f"wrist_roll_{s}", "revolute", f"wrist_{s}", f"hand_{s}", (0, 0, -0.03),
                     (1, 0, 0), (-1.2, 1.2, 20, 10))
        out += point_ee(f"hand_{s}", f"hand_{s}", (0, 0, -0.06))
    else:
        out += link(f"forearm_{s}", 0.12, (0, 0, -0.12))
        out += joint(f"elbow_{s}", "revolute", f"upperarm_{s}", f"forearm_{s}", (0, 0, -0.26),
                     (0, 1, 0), (-2.4, 0.05, 40, 10))
        out += point_ee(f"hand_{s}", f"forearm_{s}", (0, 0, -0.26))
    return out


def make_biped(long_version=False):
    name = "desk_biped_large" if long_version else "desk_biped"
    out = f'<robot name="{name}">\n'
    out += link("pelvis", 1.4, (0, 0, 0.05))
    out += link("torso", 2.0, (0, 0, 0.15))
    if long_version:
        out += link("waist", 0.25, (0, 0, 0.05))
        out += joint("waist_yaw", "revolute", "pelvis", "waist", (0, 0, 0.12), (0, 0, 1),
                     (-1.0, 1.0, 150, 10))
        out += joint("waist_pitch", "revolute", "waist", "torso", (0, 0, 0.08), (0, 1, 0),
                     (-0.6, 1.2, 150, 10))
        out += link("head", 0.3, (0, 0, 0.08))
        out += joint("neck_fixed", "fixed", "torso", "head", (0, 0, 0.34))
    else:
        out += joint("torso_fixed", "fixed", "pelvis", "torso", (0, 0, 0.12))
    out += biped_leg("l", 1)
    out += biped_leg("r", -1)
    out += biped_arm("l", 1, long_version)
    out += biped_arm("r", -1, long_version)
    values = {}
    for s in ("l", "r"):
        values[f"hip_pitch_{s}"] = -0.3
        values[f"knee_{s}"] = 0.6
        values[f"ankle_pitch_{s}"] = -0.3
        values[f"shoulder_pitch_{s}"] = -0.4
        values[f"shoulder_roll_{s}"] = 0.15 if s == "l" else -0.15
        values[f"elbow_{s}"] = -0.7
    out += posture(values)
    out += "</robot>\n"
    return out


def quad_leg(prefix, gx, gy, arm_side=False):
    out = ""
    out += link(f"hip_{prefix}", 0.08, (0, 0, 0))
    out += link(f"upper_{prefix}", 0.15, (0, 0, -0.11))
    out += link(f"lower_{prefix}", 0.06, (0, 0, -0.12))
    out += joint(f"haa_{prefix}", "revolute", "trunk", f"hip_{prefix}", (gx * 0.25, gy * 0.12, -0.02),
                 (1, 0, 0), (-0.7, 0.7, 80, 12))
    out += joint(f"hfe_{prefix}", "revolute", f"hip_{prefix}", f"upper_{prefix}", (0, gy * 0.06, 0),
                 (0, 1, 0), (-1.6, 1.6, 80, 12))
    out += joint(f"kfe_{prefix}", "revolute", f"upper_{prefix}", f"lower_{prefix}", (0, 0, -0.22),
                 (0, 1, 0), (-2.2, 2.2, 80, 12))
    out += point_ee(f"foot_{prefix}", f"lower_{prefix}", (0, 0, -0.24),
                    mu=0.3, fmin=1, fmax=400, initial="enabled")
    return out


def make_quadruped(with_arm=False):
    name = "desk_quadruped_arm" if with_arm else "desk_quadruped"
    out = f'<robot name="{name}">\n'
    out += link("trunk", 2.5, (0, 0, 0.0))
    out += """  <end_effector name="trunk_frame" link="trunk">
    <origin xyz="0 0 0" rpy="0 0 0"/>
  </end_effector>
"""
    out += quad_leg("lf", 1, 1)
    out += quad_leg("rf", 1, -1)
    out += quad_leg("lh", -1, 1)
    out += quad_leg("rh", -1, -1)
    if with_arm:
        out += link("arm_base", 0.08, (0, 0, 0.04))
        out += link("arm_link1", 0.14, (0, 0, 0.10))
        out += link("arm_link2", 0.10, (0.10, 0, 0))
        out += link("arm_link3", 0.07, (0.08, 0, 0))
        out += link("arm_link4", 0.04, (0.04, 0, 0))
        out += link("arm_hand", 0.04, (0.03, 0, 0))
        out += joint("arm_yaw", "revolute", "trunk", "arm_base", (0.20, 0, 0.05), (0, 0, 1),
                     (-2.6, 2.6, 40, 10))
        out += joint("arm_shoulder", "revolute", "arm_base", "arm_link1", (0, 0, 0.06), (0, 1, 0),
                     (-1.6, 1.6, 40, 10))
        out += joint("arm_elbow", "revolute", "arm_link1", "arm_link2", (0, 0, 0.20), (0, 1, 0),
                     (-2.4, 2.4, 40, 10))
        out += joint("arm_wrist1", "revolute", "arm_link2", "arm_link3", (0.20, 0, 0), (0, 1, 0),
                     (-1.8, 1.8, 20, 10))
        out += joint("arm_wrist2", "revolute", "arm_link3", "arm_link4", (0.16, 0, 0), (1, 0, 0),
                     (-1.8, 1.8, 20, 10))
        out += joint("arm_wrist3", "revolute", "arm_link4", "arm_hand", (0.08, 0, 0), (0, 0, 1),
                     (-1.8, 1.8, 20, 10))
        out += point_ee("hand", "arm_hand", (0.06, 0, 0), mu=0.4, fmin=0.5, fmax=150,
                        normal="0 0 1", initial="disabled")
    values = {}
    for p in ("lf", "rf", "lh", "rh"):
        front = p in ("lf", "rf")
        values[f"hfe_{p}"] = 0.5 if front else -0.5
        values[f"kfe_{p}"] = -1.0 if front else 1.0
    if with_arm:
        values["arm_shoulder"] = 0.8
        values["arm_elbow"] = 1.2
    out += posture(values)
    out += "</robot>\n"
    return out


if __name__ == "__main__":
    (ASSETS / "biped.urdf").write_text(make_biped(False))
    (ASSETS / "biped_large.urdf").write_text(make_biped(True))
    (ASSETS / "quadruped.urdf").write_text(make_quadruped(False))
    (ASSETS / "quadruped_arm.urdf").write_text(make_quadruped(True))
    print("assets written to", ASSETS)

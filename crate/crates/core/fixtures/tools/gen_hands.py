#!/usr/bin/env python3
"""Regenerates the bundled hand model documents in ../hands.

Each document records `rest_fingertips`, computed here with a plain 4x4
homogeneous-matrix chain so the Rust forward kinematics can be checked
against an independent evaluation.
"""
import json
import math
import os

import numpy as np

OUT = os.path.join(os.path.dirname(__file__), "..", "hands")


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    s = math.sin(angle / 2.0)
    return [math.cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s]


def quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return [
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ]


def rz(deg):
    return quat_from_axis_angle([0, 0, 1], math.radians(deg))


def rx(deg):
    return quat_from_axis_angle([1, 0, 0], math.radians(deg))


def rodrigues(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def quat_to_mat(q):
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


class Builder:
    def __init__(self, name):
        self.name = name
        self.links = []
        self.joints = []
        self.mimics = []
        self.fingertips = []
        self.human_fingertips = None
        self.human_map = []
        self.approach = [0.0, 0.0, -1.0]

    def link(self, name, parent, translation=(0, 0, 0), rotation=(1, 0, 0, 0)):
        self.links.append(
            {
                "name": name,
                "parent": parent,
                "offset": {
                    "rotation": [round(v, 12) for v in rotation],
                    "translation": [float(v) for v in translation],
                },
            }
        )

    def joint(self, name, child, axis, lo, hi, rest=0.0):
        self.joints.append(
            {
                "name": name,
                "child": child,
                "axis": [float(v) for v in axis],
                "type": "revolute",
                "limits": [lo, hi],
                "rest": rest,
            }
        )

    def mimic(self, joint, driver, ratio):
        self.mimics.append({"joint": joint, "driver": driver, "ratio": ratio})

    def rest_fingertips(self):
        links = {l["name"]: l for l in self.links}
        joint_of = {j["child"]: j for j in self.joints}
        angles = {j["name"]: j["rest"] for j in self.joints}
        for m in self.mimics:
            angles[m["joint"]] = m["ratio"] * angles[m["driver"]]
        cache = {}

        def world(name):
            if name in cache:
                return cache[name]
            l = links[name]
            parent = np.eye(4) if l["parent"] is None else world(l["parent"])
            off = np.eye(4)
            off[:3, :3] = quat_to_mat(l["offset"]["rotation"])
            off[:3, 3] = l["offset"]["translation"]
            jm = np.eye(4)
            if name in joint_of:
                j = joint_of[name]
                jm[:3, :3] = rodrigues(j["axis"], angles[j["name"]])
            m = parent @ off @ jm
            cache[name] = m
            return m

        return [[round(float(v), 12) for v in world(t)[:3, 3]] for t in self.fingertips]

    def document(self):
        doc = {
            "name": self.name,
            "links": self.links,
            "joints": self.joints,
            "fingertip_links": self.fingertips,
            "mimics": self.mimics,
            "human_joint_map": [{"human": h, "joint": j} for h, j in self.human_map],
            "approach_axis": self.approach,
            "rest_fingertips": self.rest_fingertips(),
        }
        if self.human_fingertips is not None:
            doc["human_fingertips"] = self.human_fingertips
        return doc


THUMB_BASE_ROT = quat_mul(rz(45), rx(-60))


def human():
    b = Builder("human-20dof")
    b.link("wrist", None)
    fingers = [
        ("index", (0.095, 0.025, 0.0), (0.045, 0.025, 0.022)),
        ("middle", (0.095, 0.0, 0.0), (0.048, 0.030, 0.024)),
        ("ring", (0.088, -0.022, 0.0), (0.045, 0.028, 0.023)),
        ("pinky", (0.080, -0.042, 0.0), (0.035, 0.020, 0.020)),
    ]
    b.link("thumb_cmc", "wrist", (0.025, 0.030, -0.010), THUMB_BASE_ROT)
    b.joint("thumb_cmc_abd", "thumb_cmc", (0, 0, 1), -0.6, 0.6)
    b.link("thumb_metacarpal", "thumb_cmc")
    b.joint("thumb_cmc_flex", "thumb_metacarpal", (0, 1, 0), -0.4, 1.2, 0.1)
    b.link("thumb_proximal", "thumb_metacarpal", (0.045, 0, 0))
    b.joint("thumb_mcp", "thumb_proximal", (0, 1, 0), -0.3, 1.2, 0.1)
    b.link("thumb_distal", "thumb_proximal", (0.032, 0, 0))
    b.joint("thumb_ip", "thumb_distal", (0, 1, 0), -0.2, 1.4, 0.1)
    b.link("thumb_tip", "thumb_distal", (0.028, 0, 0))
    tips = ["thumb_tip"]
    for f, knuckle, (l1, l2, l3) in fingers:
        b.link(f"{f}_knuckle", "wrist", knuckle)
        b.joint(f"{f}_mcp_abd", f"{f}_knuckle", (0, 0, 1), -0.35, 0.35)
        b.link(f"{f}_proximal", f"{f}_knuckle")
        b.joint(f"{f}_mcp_flex", f"{f}_proximal", (0, 1, 0), -0.3, 1.6, 0.2)
        b.link(f"{f}_middle", f"{f}_proximal", (l1, 0, 0))
        b.joint(f"{f}_pip", f"{f}_middle", (0, 1, 0), 0.0, 1.9, 0.2)
        b.link(f"{f}_distal", f"{f}_middle", (l2, 0, 0))
        b.joint(f"{f}_dip", f"{f}_distal", (0, 1, 0), 0.0, 1.4, 0.1)
        b.link(f"{f}_tip", f"{f}_distal", (l3, 0, 0))
        tips.append(f"{f}_tip")
    b.fingertips = tips
    b.human_map = [(j["name"], j["name"]) for j in b.joints]
    return b


def inspire():
    b = Builder("inspire-like-6dof")
    b.link("wrist", None)
    b.link("thumb_yaw_link", "wrist", (0.030, 0.025, -0.012))
    b.joint("thumb_yaw", "thumb_yaw_link", (-1, 0, 0), 0.0, 1.3)
    b.link("thumb_proximal", "thumb_yaw_link", (0, 0, 0), rz(70))
    b.joint("thumb_pitch", "thumb_proximal", (0, 1, 0), 0.0, 0.6)
    b.link("thumb_intermediate", "thumb_proximal", (0.045, 0, 0))
    b.joint("thumb_intermediate", "thumb_intermediate", (0, 1, 0), 0.0, 0.96)
    b.link("thumb_distal", "thumb_intermediate", (0.025, 0, 0))
    b.joint("thumb_distal", "thumb_distal", (0, 1, 0), 0.0, 0.96)
    b.link("thumb_tip", "thumb_distal", (0.030, 0, 0))
    b.mimic("thumb_intermediate", "thumb_pitch", 1.6)
    b.mimic("thumb_distal", "thumb_pitch", 1.6)
    tips = ["thumb_tip"]
    knuckles = [
        ("index", (0.098, 0.027, -0.005)),
        ("middle", (0.100, 0.006, -0.005)),
        ("ring", (0.096, -0.015, -0.005)),
        ("pinky", (0.090, -0.035, -0.005)),
    ]
    for f, k in knuckles:
        b.link(f"{f}_proximal", "wrist", k)
        b.joint(f"{f}_proximal", f"{f}_proximal", (0, 1, 0), 0.0, 1.7)
        b.link(f"{f}_intermediate", f"{f}_proximal", (0.048, 0, 0))
        b.joint(f"{f}_intermediate", f"{f}_intermediate", (0, 1, 0), 0.0, 1.785)
        b.link(f"{f}_tip", f"{f}_intermediate", (0.050, 0, 0))
        b.mimic(f"{f}_intermediate", f"{f}_proximal", 1.05)
        tips.append(f"{f}_tip")
    b.fingertips = tips
    b.human_map = [
        ("thumb_cmc_abd", "thumb_yaw"),
        ("thumb_mcp", "thumb_pitch"),
        ("index_mcp_flex", "index_proximal"),
        ("middle_mcp_flex", "middle_proximal"),
        ("ring_mcp_flex", "ring_proximal"),
        ("pinky_mcp_flex", "pinky_proximal"),
    ]
    return b


def leap():
    b = Builder("leap-like-16dof")
    b.link("wrist", None)
    b.link("thumb_base", "wrist", (0.030, 0.040, -0.015), THUMB_BASE_ROT)
    b.joint("thumb_abd", "thumb_base", (0, 0, 1), -0.5, 1.2)
    b.link("thumb_metacarpal", "thumb_base")
    b.joint("thumb_flex", "thumb_metacarpal", (0, 1, 0), -0.4, 1.6)
    b.link("thumb_proximal", "thumb_metacarpal", (0.040, 0, 0))
    b.joint("thumb_pip", "thumb_proximal", (0, 1, 0), -0.3, 1.9)
    b.link("thumb_distal", "thumb_proximal", (0.035, 0, 0))
    b.joint("thumb_dip", "thumb_distal", (0, 1, 0), -0.3, 1.9)
    b.link("thumb_tip", "thumb_distal", (0.045, 0, 0))
    tips = ["thumb_tip"]
    for f, y in [("index", 0.040), ("middle", 0.0), ("ring", -0.040)]:
        b.link(f"{f}_knuckle", "wrist", (0.090, y, -0.010))
        b.joint(f"{f}_abd", f"{f}_knuckle", (0, 0, 1), -1.0, 1.0)
        b.link(f"{f}_proximal", f"{f}_knuckle")
        b.joint(f"{f}_mcp", f"{f}_proximal", (0, 1, 0), -0.3, 2.2)
        b.link(f"{f}_middle", f"{f}_proximal", (0.050, 0, 0))
        b.joint(f"{f}_pip", f"{f}_middle", (0, 1, 0), -0.5, 1.9)
        b.link(f"{f}_distal", f"{f}_middle", (0.035, 0, 0))
        b.joint(f"{f}_dip", f"{f}_distal", (0, 1, 0), -0.3, 2.0)
        b.link(f"{f}_tip", f"{f}_distal", (0.045, 0, 0))
        tips.append(f"{f}_tip")
    b.fingertips = tips
    b.human_map = [
        ("thumb_cmc_abd", "thumb_abd"),
        ("thumb_cmc_flex", "thumb_flex"),
        ("thumb_mcp", "thumb_pip"),
        ("thumb_ip", "thumb_dip"),
    ]
    for f in ["index", "middle", "ring"]:
        b.human_map += [
            (f"{f}_mcp_abd", f"{f}_abd"),
            (f"{f}_mcp_flex", f"{f}_mcp"),
            (f"{f}_pip", f"{f}_pip"),
            (f"{f}_dip", f"{f}_dip"),
        ]
    return b


def shadow():
    b = Builder("shadow-like-22dof")
    b.link("palm", None)
    b.link("th_base", "palm", (0.030, 0.030, -0.010), THUMB_BASE_ROT)
    b.joint("thj5", "th_base", (0, 0, 1), -1.047, 1.047)
    b.link("th_proximal", "th_base")
    b.joint("thj4", "th_proximal", (0, 1, 0), 0.0, 1.222)
    b.link("th_hub", "th_proximal", (0.038, 0, 0))
    b.joint("thj3", "th_hub", (1, 0, 0), -0.209, 0.209)
    b.link("th_middle", "th_hub")
    b.joint("thj2", "th_middle", (0, 0, 1), -0.698, 0.698)
    b.link("th_distal", "th_middle", (0.032, 0, 0))
    b.joint("thj1", "th_distal", (0, 1, 0), -0.262, 1.571)
    b.link("thtip", "th_distal", (0.0275, 0, 0))
    tips = ["thtip"]
    for p, y in [("ff", 0.033), ("mf", 0.011), ("rf", -0.011)]:
        b.link(f"{p}_knuckle", "palm", (0.095, y, 0.0))
        b.joint(f"{p}j4", f"{p}_knuckle", (0, 0, 1), -0.349, 0.349)
        b.link(f"{p}_proximal", f"{p}_knuckle")
        b.joint(f"{p}j3", f"{p}_proximal", (0, 1, 0), -0.262, 1.571)
        b.link(f"{p}_middle", f"{p}_proximal", (0.045, 0, 0))
        b.joint(f"{p}j2", f"{p}_middle", (0, 1, 0), 0.0, 1.571)
        b.link(f"{p}_distal", f"{p}_middle", (0.025, 0, 0))
        b.joint(f"{p}j1", f"{p}_distal", (0, 1, 0), 0.0, 1.571)
        b.link(f"{p}tip", f"{p}_distal", (0.026, 0, 0))
        tips.append(f"{p}tip")
    b.link("lf_metacarpal", "palm", (0.030, -0.033, 0.0))
    b.joint("lfj5", "lf_metacarpal", (0.573576, 0, 0.819152), 0.0, 0.785)
    b.link("lf_knuckle", "lf_metacarpal", (0.055, 0, 0))
    b.joint("lfj4", "lf_knuckle", (0, 0, 1), -0.349, 0.349)
    b.link("lf_proximal", "lf_knuckle")
    b.joint("lfj3", "lf_proximal", (0, 1, 0), -0.262, 1.571)
    b.link("lf_middle", "lf_proximal", (0.045, 0, 0))
    b.joint("lfj2", "lf_middle", (0, 1, 0), 0.0, 1.571)
    b.link("lf_distal", "lf_middle", (0.025, 0, 0))
    b.joint("lfj1", "lf_distal", (0, 1, 0), 0.0, 1.571)
    b.link("lftip", "lf_distal", (0.026, 0, 0))
    tips.append("lftip")
    b.fingertips = tips
    b.human_fingertips = ["thumb_tip", "index_tip", "middle_tip", "ring_tip", "pinky_tip"]
    b.human_map = [
        ("thumb_cmc_abd", "thj5"),
        ("thumb_cmc_flex", "thj4"),
        ("thumb_ip", "thj1"),
    ]
    for h, p in [("index", "ff"), ("middle", "mf"), ("ring", "rf"), ("pinky", "lf")]:
        b.human_map += [
            (f"{h}_mcp_abd", f"{p}j4"),
            (f"{h}_mcp_flex", f"{p}j3"),
            (f"{h}_pip", f"{p}j2"),
            (f"{h}_dip", f"{p}j1"),
        ]
    return b


def main():
    for b in [human(), inspire(), leap(), shadow()]:
        doc = b.document()
        path = os.path.join(OUT, f"{b.name}.json")
        with open(path, "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
        print(path, len(doc["joints"]), "joints")


if __name__ == "__main__":
    main()

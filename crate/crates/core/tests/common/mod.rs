//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.
#![allow(dead_code)]

use std::collections::HashMap;

use dexgrasp::geometry::Pose;
use dexgrasp::kinematics::KinematicHandModel;
use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::Rng;
use serde_json::Value;

pub fn quat_matrix(wxyz: [f64; 4]) -> Matrix3<f64> {
    let n = wxyz.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = wxyz.map(|v| v / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

pub fn rodrigues(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let a = axis.normalize();
    let k = Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0);
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

pub fn homogeneous(r: Matrix3<f64>, t: Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    m
}

pub fn pose_matrix(p: &Pose) -> Matrix4<f64> {
    let q = p.rotation().quaternion();
    homogeneous(quat_matrix([q.w, q.i, q.j, q.k]), *p.translation())
}

pub fn point(m: &Matrix4<f64>, p: &Vector3<f64>) -> Vector3<f64> {
    (m * p.push(1.0)).xyz()
}

/// Homogeneous-matrix chain read straight from a hand model JSON document.
pub struct MatrixChainOracle {
    links: Vec<(String, Option<String>, Matrix4<f64>)>,
    joint_of_link: HashMap<String, (String, Vector3<f64>)>,
    joint_order: Vec<String>,
    mimics: Vec<(String, String, f64)>,
    tips: Vec<String>,
}

impl MatrixChainOracle {
    pub fn from_json(text: &str) -> Self {
        let doc: Value = serde_json::from_str(text).unwrap();
        let vec3 = |v: &Value| Vector3::new(v[0].as_f64().unwrap(), v[1].as_f64().unwrap(), v[2].as_f64().unwrap());
        let links = doc["links"]
            .as_array()
            .unwrap()
            .iter()
            .map(|l| {
                let off = &l["offset"];
                let q = if off["rotation"].is_array() {
                    let r = &off["rotation"];
                    [0, 1, 2, 3].map(|i| r[i].as_f64().unwrap())
                } else {
                    [1.0, 0.0, 0.0, 0.0]
                };
                let t = if off["translation"].is_array() { vec3(&off["translation"]) } else { Vector3::zeros() };
                (
                    l["name"].as_str().unwrap().to_string(),
                    l["parent"].as_str().map(|s| s.to_string()),
                    homogeneous(quat_matrix(q), t),
                )
            })
            .collect();
        let mut joint_of_link = HashMap::new();
        let mut joint_order = Vec::new();
        for j in doc["joints"].as_array().unwrap() {
            let name = j["name"].as_str().unwrap().to_string();
            joint_order.push(name.clone());
            joint_of_link.insert(j["child"].as_str().unwrap().to_string(), (name, vec3(&j["axis"])));
        }
        let mimics = doc["mimics"]
            .as_array()
            .map(|a| {
                a.iter()
                    .map(|m| {
                        (
                            m["joint"].as_str().unwrap().to_string(),
                            m["driver"].as_str().unwrap().to_string(),
                            m["ratio"].as_f64().unwrap(),
                        )
                    })
                    .collect()
            })
            .unwrap_or_default();
        let tips = doc["fingertip_links"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t.as_str().unwrap().to_string())
            .collect();
        Self { links, joint_of_link, joint_order, mimics, tips }
    }

    pub fn fingertips(&self, root: &Matrix4<f64>, angles: &[f64]) -> Vec<Vector3<f64>> {
        let mut by_name: HashMap<&str, f64> =
            self.joint_order.iter().map(|n| n.as_str()).zip(angles.iter().copied()).collect();
        for (j, d, r) in &self.mimics {
            let v = r * by_name[d.as_str()];
            by_name.insert(j.as_str(), v);
        }
        self.tips
            .iter()
            .map(|t| {
                let m = self.world(t, root, &by_name);
                Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)])
            })
            .collect()
    }

    fn world(&self, name: &str, root: &Matrix4<f64>, angles: &HashMap<&str, f64>) -> Matrix4<f64> {
        let (_, parent, offset) = self.links.iter().find(|(n, _, _)| n == name).unwrap();
        let base = match parent {
            Some(p) => self.world(p, root, angles),
            None => *root,
        };
        let joint = match self.joint_of_link.get(name) {
            Some((j, axis)) => homogeneous(rodrigues(*axis, angles[j.as_str()]), Vector3::zeros()),
            None => Matrix4::identity(),
        };
        base * offset * joint
    }
}

pub fn random_pose(rng: &mut impl Rng, translation_range: f64) -> Pose {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let angle = rng.random_range(-3.1..3.1);
    let t = Vector3::new(
        rng.random_range(-translation_range..translation_range),
        rng.random_range(-translation_range..translation_range),
        rng.random_range(-translation_range..translation_range),
    );
    Pose::from_axis_angle(&axis, angle).compose(&Pose::identity()).with_translation(t)
}

/// Uniform in-limit angles for independent joints; mimic joints re-derived.
pub fn random_angles(model: &KinematicHandModel, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = model.joints().iter().map(|j| rng.random_range(j.lo..=j.hi)).collect();
    model.clamp_to_limits(&raw).unwrap()
}

/// Uniform in-limit angles shrunk toward the middle of the range by `margin` (fraction).
pub fn random_angles_interior(model: &KinematicHandModel, rng: &mut impl Rng, margin: f64) -> Vec<f64> {
    let raw: Vec<f64> = model
        .joints()
        .iter()
        .map(|j| {
            let pad = (j.hi - j.lo) * margin;
            rng.random_range(j.lo + pad..=j.hi - pad)
        })
        .collect();
    model.clamp_to_limits(&raw).unwrap()
}

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::controller::Gains;
use super::GraspError;
use crate::geometry::TriangleMesh;
use crate::kinematics::{fingertips, HandConfiguration, KinematicHandModel};
use crate::reconstruction::{parse_fixture, ProviderError};

pub const CONTACT_FILE: &str = "contact.json";

/// Per-finger closing coordinate: distance (rad) travelled from the pre-grasp
/// joints toward the squeeze joints, projected on that straight line.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosingPath {
    pub groups: Vec<Vec<usize>>,
    pre: Vec<f64>,
    directions: Vec<Vec<f64>>,
    pub lengths: Vec<f64>,
}

impl ClosingPath {
    pub fn new(model: &KinematicHandModel, pre: &[f64], squeeze: &[f64]) -> Result<Self, GraspError> {
        for got in [pre.len(), squeeze.len()] {
            if got != model.joint_count() {
                return Err(GraspError::DimensionMismatch { expected: model.joint_count(), got });
            }
        }
        let groups: Vec<Vec<usize>> = model
            .finger_joint_groups()
            .into_iter()
            .map(|g| g.into_iter().filter(|&j| !model.is_mimic(j)).collect())
            .collect();
        let mut directions = Vec::new();
        let mut lengths = Vec::new();
        for g in &groups {
            let d: Vec<f64> = g.iter().map(|&j| squeeze[j] - pre[j]).collect();
            let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            directions.push(if len > 0.0 { d.iter().map(|v| v / len).collect() } else { vec![0.0; g.len()] });
            lengths.push(len);
        }
        Ok(Self { groups, pre: pre.to_vec(), directions, lengths })
    }

    pub fn coordinates(&self, q: &[f64]) -> Vec<f64> {
        self.groups
            .iter()
            .zip(&self.directions)
            .map(|(g, d)| g.iter().zip(d).map(|(&j, dj)| (q[j] - self.pre[j]) * dj).sum())
            .collect()
    }

    /// Joint vector with finger `k` moved to coordinate `s` and every other joint at pre-grasp.
    pub fn point(&self, k: usize, s: f64) -> Vec<f64> {
        let mut q = self.pre.clone();
        for (&j, d) in self.groups[k].iter().zip(&self.directions[k]) {
            q[j] += s * d;
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerContactModel {
    /// Closing coordinate (rad) at which the finger touches; `None` never touches.
    pub engagement: Option<f64>,
    /// N/rad
    pub stiffness: f64,
    pub yield_force: Option<f64>,
}

/// Joint-space linear spring per finger standing in for a force sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactModel {
    pub fingers: Vec<FingerContactModel>,
    #[serde(default)]
    pub noise_sigma: f64,
}

impl ContactModel {
    pub fn new(fingers: Vec<FingerContactModel>) -> Result<Self, GraspError> {
        if let Some(f) = fingers.iter().find(|f| !(f.stiffness > 0.0 && f.stiffness.is_finite())) {
            return Err(GraspError::NonPositiveStiffness(f.stiffness));
        }
        Ok(Self { fingers, noise_sigma: 0.0 })
    }

    pub fn uniform(engagement: Option<f64>, stiffness: f64, yield_force: Option<f64>, fingers: usize) -> Result<Self, GraspError> {
        Self::new(vec![FingerContactModel { engagement, stiffness, yield_force }; fingers])
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma.max(0.0);
        self
    }

    /// Engagement from geometry: each finger is swept alone from pre-grasp
    /// toward squeeze and the first surface crossing is located by bisection.
    /// A fingertip already inside the surface engages at 0.
    pub fn from_geometry(
        model: &KinematicHandModel,
        root_pose_object: &crate::geometry::Pose,
        path: &ClosingPath,
        mesh: &TriangleMesh,
        stiffness: &[f64],
        yield_force: &[Option<f64>],
    ) -> Result<Self, GraspError> {
        let k = path.groups.len();
        if stiffness.len() != k || yield_force.len() != k {
            return Err(GraspError::DimensionMismatch { expected: k, got: stiffness.len().min(yield_force.len()) });
        }
        let sd = |finger: usize, s: f64| -> Result<f64, GraspError> {
            let cfg = HandConfiguration::new(*root_pose_object, model.clamp_to_limits(&path.point(finger, s))?);
            Ok(mesh.signed_distance(&fingertips(model, &cfg)?[finger])?)
        };
        let mut fingers = Vec::with_capacity(k);
        for finger in 0..k {
            let len = path.lengths[finger];
            let engagement = if sd(finger, 0.0)? <= 0.0 {
                Some(0.0)
            } else {
                const SAMPLES: usize = 64;
                let mut found = None;
                let mut prev = 0.0;
                for i in 1..=SAMPLES {
                    let s = len * i as f64 / SAMPLES as f64;
                    if sd(finger, s)? <= 0.0 {
                        let (mut a, mut b) = (prev, s);
                        for _ in 0..60 {
                            let m = 0.5 * (a + b);
                            if sd(finger, m)? <= 0.0 {
                                b = m;
                            } else {
                                a = m;
                            }
                        }
                        found = Some(b);
                        break;
                    }
                    prev = s;
                }
                found
            };
            fingers.push(FingerContactModel {
                engagement,
                stiffness: stiffness[finger],
                yield_force: yield_force[finger],
            });
        }
        Self::new(fingers)
    }
}

/// Noise-free spring force for each finger's closing coordinate.
pub fn sense_force(model: &ContactModel, positions: &[f64]) -> Result<Vec<f64>, GraspError> {
    if positions.len() != model.fingers.len() {
        return Err(GraspError::DimensionMismatch { expected: model.fingers.len(), got: positions.len() });
    }
    Ok(model
        .fingers
        .iter()
        .zip(positions)
        .map(|(f, s)| match f.engagement {
            Some(e) => f.stiffness * (s - e).max(0.0),
            None => 0.0,
        })
        .collect())
}

/// Spring force plus Gaussian sensor noise, clamped to stay non-negative.
pub fn sense_force_noisy(model: &ContactModel, positions: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>, GraspError> {
    let clean = sense_force(model, positions)?;
    if model.noise_sigma <= 0.0 {
        return Ok(clean);
    }
    let normal = Normal::new(0.0, model.noise_sigma).map_err(|_| GraspError::BadNoise(model.noise_sigma))?;
    Ok(clean.into_iter().map(|f| (f + normal.sample(rng)).max(0.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerMaterial {
    pub stiffness: f64,
    #[serde(default)]
    pub yield_force: Option<f64>,
}

/// Contents of a scene's `contact.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSpec {
    pub stiffness: f64,
    #[serde(default)]
    pub yield_force: Option<f64>,
    #[serde(default)]
    pub per_finger: Option<Vec<FingerMaterial>>,
    /// Explicit engagement coordinates; otherwise derived from geometry.
    #[serde(default)]
    pub engagement: Option<Vec<Option<f64>>>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub gains: Gains,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub max_steps: Option<usize>,
}

impl ContactSpec {
    pub fn load(dir: &Path) -> Result<Self, ProviderError> {
        parse_fixture(dir, CONTACT_FILE)
    }

    pub fn materials(&self, fingers: usize) -> Result<Vec<FingerMaterial>, GraspError> {
        match &self.per_finger {
            Some(list) if list.len() != fingers => Err(GraspError::DimensionMismatch { expected: fingers, got: list.len() }),
            Some(list) => Ok(list.clone()),
            None => Ok(vec![FingerMaterial { stiffness: self.stiffness, yield_force: self.yield_force }; fingers]),
        }
    }
}

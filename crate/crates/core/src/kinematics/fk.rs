use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::model::{KinematicHandModel, KinematicsError};
use crate::geometry::{axis_angle, Pose};

/// Central-difference step for Jacobian columns (rad for angles, m for translation).
pub const JACOBIAN_STEP: f64 = 1e-6;

/// Wrist pose plus one angle per model joint (model order, radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandConfiguration {
    pub root_pose: Pose,
    pub joint_angles: Vec<f64>,
}

impl HandConfiguration {
    pub fn new(root_pose: Pose, joint_angles: Vec<f64>) -> Self {
        Self {
            root_pose,
            joint_angles,
        }
    }

    pub fn rest(model: &KinematicHandModel, root_pose: Pose) -> Self {
        Self::new(root_pose, model.rest_angles())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FkResult {
    pub link_poses: Vec<Pose>,
    pub fingertips: Vec<Vector3<f64>>,
}

pub fn forward_kinematics(
    model: &KinematicHandModel,
    config: &HandConfiguration,
) -> Result<FkResult, KinematicsError> {
    model.check_len(config.joint_angles.len())?;
    let angles = model.effective_angles(&config.joint_angles);
    let links = model.links();
    let mut poses = vec![Pose::identity(); links.len()];
    for &i in model.link_order() {
        let link = &links[i];
        let parent = match link.parent {
            Some(p) => poses[p],
            None => config.root_pose,
        };
        let mut pose = parent.compose(&link.offset);
        if let Some(j) = link.joint {
            let joint = &model.joints()[j];
            pose = pose.compose(&Pose::from_rotation(axis_angle(&joint.axis, angles[j])));
        }
        poses[i] = pose;
    }
    let fingertips = model
        .fingertip_links()
        .iter()
        .map(|&i| *poses[i].translation())
        .collect();
    Ok(FkResult {
        link_poses: poses,
        fingertips,
    })
}

pub fn fingertips(
    model: &KinematicHandModel,
    config: &HandConfiguration,
) -> Result<Vec<Vector3<f64>>, KinematicsError> {
    forward_kinematics(model, config).map(|r| r.fingertips)
}

/// Applies a parameter increment laid out as the Jacobian columns:
/// `[rotation vector (3), translation (3), joints (J)]`. No clamping.
pub fn apply_increment(config: &HandConfiguration, delta: &[f64]) -> HandConfiguration {
    let omega = Vector3::new(delta[0], delta[1], delta[2]);
    let v = Vector3::new(delta[3], delta[4], delta[5]);
    HandConfiguration {
        root_pose: config.root_pose.perturbed(&omega, &v),
        joint_angles: config
            .joint_angles
            .iter()
            .zip(&delta[6..])
            .map(|(a, d)| a + d)
            .collect(),
    }
}

/// Fingertip Jacobian by central differences, `3K × (6 + J)`.
///
/// Root columns perturb the wrist in the world frame (rotation vector about
/// the wrist origin, then translation). Mimic joint columns are zero since
/// their angles follow the driver.
pub fn fingertip_jacobian(
    model: &KinematicHandModel,
    config: &HandConfiguration,
) -> Result<DMatrix<f64>, KinematicsError> {
    fingertip_jacobian_with_step(model, config, JACOBIAN_STEP)
}

pub fn fingertip_jacobian_with_step(
    model: &KinematicHandModel,
    config: &HandConfiguration,
    h: f64,
) -> Result<DMatrix<f64>, KinematicsError> {
    model.check_len(config.joint_angles.len())?;
    let k = model.finger_count();
    let n = 6 + model.joint_count();
    let mut jac = DMatrix::zeros(3 * k, n);
    let mut delta = vec![0.0; n];
    for col in 0..n {
        if col >= 6 && model.is_mimic(col - 6) {
            continue;
        }
        delta[col] = h;
        let plus = fingertips(model, &apply_increment(config, &delta))?;
        delta[col] = -h;
        let minus = fingertips(model, &apply_increment(config, &delta))?;
        delta[col] = 0.0;
        for f in 0..k {
            let d = (plus[f] - minus[f]) / (2.0 * h);
            jac[(3 * f, col)] = d.x;
            jac[(3 * f + 1, col)] = d.y;
            jac[(3 * f + 2, col)] = d.z;
        }
    }
    Ok(jac)
}

pub fn clamp_to_limits(
    model: &KinematicHandModel,
    angles: &[f64],
) -> Result<Vec<f64>, KinematicsError> {
    model.clamp_to_limits(angles)
}

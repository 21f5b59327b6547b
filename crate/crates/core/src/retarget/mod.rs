//! Human-to-dexterous retargeting, contact offsets and frame changes.

mod offsets;
mod solver;

pub use offsets::{
    compute_contacts, make_offset_grasp, make_pregrasp, make_squeeze, ContactSet, FingerContact,
    DEFAULT_ENGAGE_THRESHOLD, PREGRASP_OFFSET, SQUEEZE_OFFSET,
};
pub use solver::{
    fingertip_objective, refine_retarget, refine_retarget_traced, RefineTrace, SolverSettings,
};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{MeshError, Pose};
use crate::kinematics::{
    fingertips, Frame, HandConfiguration, HandPoseEstimate, KinematicHandModel, KinematicsError,
};

/// Stand-off distance of the first execution stage along the approach axis (m).
pub const APPROACH_DISTANCE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RetargetError {
    #[error("hand model '{0}' has no human joint map")]
    MissingJointMap(String),
    #[error("human joint '{0}' not found in the skeleton")]
    UnknownHumanJoint(String),
    #[error("human fingertip '{0}' not found in the skeleton")]
    UnknownHumanFingertip(String),
    #[error("grasp is in frame {got:?}, expected {expected:?}")]
    WrongFrame { expected: Frame, got: Frame },
    #[error("grasp belongs to hand model '{got}', expected '{expected}'")]
    ModelMismatch { expected: String, got: String },
    #[error("expected {expected} targets, got {got}")]
    TargetCount { expected: usize, got: usize },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Dexterous grasp: wrist pose plus joint angles, tagged with its frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspAction {
    pub hand_model: String,
    pub config: HandConfiguration,
    pub frame: Frame,
    /// Per-finger fingertip error (m) from the last optimization.
    pub residual: Vec<f64>,
}

impl GraspAction {
    pub fn require_frame(&self, expected: Frame) -> Result<(), RetargetError> {
        if self.frame != expected {
            return Err(RetargetError::WrongFrame {
                expected,
                got: self.frame,
            });
        }
        Ok(())
    }

    pub(crate) fn require_model(&self, model: &KinematicHandModel) -> Result<(), RetargetError> {
        if self.hand_model != model.name() {
            return Err(RetargetError::ModelMismatch {
                expected: model.name().to_string(),
                got: self.hand_model.clone(),
            });
        }
        Ok(())
    }

    pub fn fingertips(&self, model: &KinematicHandModel) -> Result<Vec<Vector3<f64>>, RetargetError> {
        Ok(fingertips(model, &self.config)?)
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }
}

/// Copies the wrist pose and the mapped joint angles from a human estimate.
pub fn initialize_retarget(
    human: &HandPoseEstimate,
    human_model: &KinematicHandModel,
    model: &KinematicHandModel,
) -> Result<GraspAction, RetargetError> {
    if model.human_joint_map().is_empty() {
        return Err(RetargetError::MissingJointMap(model.name().to_string()));
    }
    if human.skeleton != human_model.name() {
        return Err(RetargetError::ModelMismatch {
            expected: human_model.name().to_string(),
            got: human.skeleton.clone(),
        });
    }
    let mut angles = model.rest_angles();
    for (human_joint, joint) in model.human_joint_map() {
        let h = human_model
            .joint_by_name(human_joint)
            .ok_or_else(|| RetargetError::UnknownHumanJoint(human_joint.clone()))?;
        let j = model
            .joint_by_name(joint)
            .ok_or_else(|| RetargetError::UnknownHumanJoint(joint.clone()))?;
        angles[j] = *human
            .config
            .joint_angles
            .get(h)
            .ok_or(KinematicsError::DimensionMismatch {
                expected: human_model.joint_count(),
                got: human.config.joint_angles.len(),
            })?;
    }
    let angles = model.clamp_to_limits(&angles)?;
    let config = HandConfiguration::new(human.config.root_pose, angles);
    let tips = fingertips(model, &config)?;
    let targets = human_targets(human, human_model, model)?;
    let residual = tips.iter().zip(&targets).map(|(a, b)| (a - b).norm()).collect();
    Ok(GraspAction {
        hand_model: model.name().to_string(),
        config,
        frame: human.frame,
        residual,
    })
}

/// Human keypoints matched to each fingertip of `model`, in model fingertip order.
pub fn human_targets(
    human: &HandPoseEstimate,
    human_model: &KinematicHandModel,
    model: &KinematicHandModel,
) -> Result<Vec<Vector3<f64>>, RetargetError> {
    let names = human_model.fingertip_names();
    model
        .human_fingertips()
        .iter()
        .map(|tip| {
            let idx = names
                .iter()
                .position(|n| n == tip)
                .ok_or_else(|| RetargetError::UnknownHumanFingertip(tip.clone()))?;
            human
                .fingertip_points
                .get(idx)
                .copied()
                .ok_or_else(|| RetargetError::UnknownHumanFingertip(tip.clone()))
        })
        .collect()
}

/// Moves an object-frame grasp into the robot base frame.
pub fn to_robot_frame(
    grasp: &GraspAction,
    t_o_obs: &Pose,
    hand_eye: &Pose,
) -> Result<GraspAction, RetargetError> {
    grasp.require_frame(Frame::Object)?;
    let root = hand_eye.compose(&t_o_obs.compose(&grasp.config.root_pose));
    Ok(GraspAction {
        hand_model: grasp.hand_model.clone(),
        config: HandConfiguration::new(root, grasp.config.joint_angles.clone()),
        frame: Frame::Robot,
        residual: grasp.residual.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStagePlan {
    pub stage1: GraspAction,
    pub stage2: GraspAction,
}

/// Stage 1 backs the wrist off along its approach axis with the fingers in
/// the pre-grasp configuration; stage 2 is the grasp itself.
pub fn plan_two_stage(
    grasp: &GraspAction,
    pregrasp_angles: &[f64],
    model: &KinematicHandModel,
) -> Result<TwoStagePlan, RetargetError> {
    grasp.require_frame(Frame::Robot)?;
    grasp.require_model(model)?;
    model.check_len(pregrasp_angles.len())?;
    let root = grasp.config.root_pose;
    let approach = root.transform_vector(model.approach_axis());
    let stage1_root = root.with_translation(root.translation() - APPROACH_DISTANCE * approach);
    let stage1 = GraspAction {
        hand_model: grasp.hand_model.clone(),
        config: HandConfiguration::new(stage1_root, pregrasp_angles.to_vec()),
        frame: Frame::Robot,
        residual: grasp.residual.clone(),
    };
    Ok(TwoStagePlan {
        stage1,
        stage2: grasp.clone(),
    })
}

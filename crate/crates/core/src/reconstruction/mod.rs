//! Turning a generated human grasp image into a metric hand pose in the
//! object frame.

mod align;
mod prompt;
mod providers;

pub use align::{
    align_depth, contact_fingers_within, to_object_frame, DepthAlignment, DEFAULT_CONTACT_RADIUS,
    DEPTH_SEARCH_RANGE, DEPTH_TOLERANCE,
};
pub use prompt::{
    build_prompt, Attachment, PromptBundle, PromptKind, DEMO_DIRECTIVE, NEGATIVE_PROMPT,
    REGION_DIRECTIVE,
};
pub use providers::{
    FixtureForcePredictor, ForceEntry, ForcePredictor, GraspImageProvider, HandEstimateDocument,
    HandEstimator, ImageRef, Intrinsics, MeshProvider, ObjectPoseEstimator, PosesDocument,
    ProviderError, SceneDocument, SceneFixture, SceneObservation, HAND_FILE, MESH_FILE,
    POSES_FILE, SCENE_FILE,
};
pub(crate) use providers::parse_fixture;

use crate::geometry::MeshError;
use crate::kinematics::{Frame, KinematicsError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReconstructionError {
    #[error("missing required field '{0}'")]
    MissingField(&'static str),
    #[error("no contact fingers for depth alignment")]
    EmptyContactSet,
    #[error("finger index {index} out of range for a {count}-finger hand")]
    FingerOutOfRange { index: usize, count: usize },
    #[error("depth alignment did not converge: {0}")]
    NoConvergence(String),
    #[error("hand estimate skeleton '{got}' does not match model '{expected}'")]
    SkeletonMismatch { expected: String, got: String },
    #[error("hand estimate is in frame {got:?}, expected {expected:?}")]
    WrongFrame { expected: Frame, got: Frame },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

//! Stand-ins for the foundation-model stages. Every provider is deterministic
//! for identical inputs and safe to share across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::prompt::{PromptBundle, PromptKind};
use crate::geometry::{load_obj, MeshError, Pose, TriangleMesh};
use crate::kinematics::{
    bundled_model, Frame, HandConfiguration, HandPoseEstimate, KeypointSource, KinematicsError,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("fixture missing: {0}")]
    FixtureMissing(String),
    #[error("invalid fixture {path}: {message}")]
    Invalid { path: String, message: String },
}

impl ProviderError {
    fn invalid(path: &Path, message: impl fmt::Display) -> Self {
        ProviderError::Invalid {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }
}

/// Opaque handle to an image (observation or generated).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageRef(pub String);

impl fmt::Display for ImageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn is_valid(&self) -> bool {
        [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

/// Single-view observation of the scene.
#[derive(Debug, Clone)]
pub struct SceneObservation {
    pub rgb_image_ref: ImageRef,
    pub intrinsics: Intrinsics,
    pub object_mesh: TriangleMesh,
    /// Carried for completeness; no stage consumes it.
    pub point_cloud_ref: Option<String>,
}

pub trait GraspImageProvider: Send + Sync {
    fn generate(
        &self,
        observation: &SceneObservation,
        prompt: &PromptBundle,
    ) -> Result<ImageRef, ProviderError>;
}

pub trait HandEstimator: Send + Sync {
    fn estimate_hand(&self, image: &ImageRef) -> Result<HandPoseEstimate, ProviderError>;
}

pub trait ObjectPoseEstimator: Send + Sync {
    fn estimate_pose(&self, image: &ImageRef, mesh: &TriangleMesh) -> Result<Pose, ProviderError>;
}

pub trait MeshProvider: Send + Sync {
    fn object_mesh(&self, image: &ImageRef) -> Result<TriangleMesh, ProviderError>;
}

pub trait ForcePredictor: Send + Sync {
    /// Target grasp force in newtons.
    fn target_force(&self, object: &str) -> Result<f64, ProviderError>;
}

// ---- fixture files ----------------------------------------------------------

pub const SCENE_FILE: &str = "scene.json";
pub const MESH_FILE: &str = "object.obj";
pub const HAND_FILE: &str = "hand_estimate.json";
pub const POSES_FILE: &str = "poses.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub name: String,
    pub object: String,
    pub intent: String,
    #[serde(default)]
    pub prompt_kind: PromptKind,
    pub intrinsics: Intrinsics,
    #[serde(default = "one")]
    pub mesh_scale: f64,
    #[serde(default)]
    pub hand_model: Option<String>,
    #[serde(default)]
    pub target_force: Option<ForceEntry>,
    /// Fingers treated as contacts by depth alignment; default is proximity-based.
    #[serde(default)]
    pub contact_fingers: Option<Vec<usize>>,
    #[serde(default = "default_observation")]
    pub observation_image: String,
    #[serde(default)]
    pub region_mask: Option<String>,
    #[serde(default)]
    pub demo_image: Option<String>,
    #[serde(default)]
    pub point_cloud: Option<String>,
}

fn one() -> f64 {
    1.0
}

fn default_observation() -> String {
    "observation.png".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceEntry {
    pub object: String,
    pub newtons: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandEstimateDocument {
    pub skeleton: String,
    pub root_pose: Pose,
    pub joint_angles: Vec<f64>,
    #[serde(default)]
    pub keypoints: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosesDocument {
    /// Object in the generated-image camera frame.
    pub object_gen: Pose,
    /// Object in the real camera frame.
    pub object_obs: Pose,
    /// Real camera to robot base.
    pub hand_eye: Pose,
}

/// Force lookup table keyed by normalized object description.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixtureForcePredictor {
    table: BTreeMap<String, f64>,
}

const BUNDLED_FORCE_TABLE: &str = include_str!("../../fixtures/force_table.json");

fn force_key(s: &str) -> String {
    s.trim().to_lowercase()
}

impl FixtureForcePredictor {
    pub fn bundled() -> Self {
        let raw: BTreeMap<String, f64> =
            serde_json::from_str(BUNDLED_FORCE_TABLE).expect("bundled force table is valid");
        Self {
            table: raw.into_iter().map(|(k, v)| (force_key(&k), v)).collect(),
        }
    }

    pub fn with_entry(mut self, object: &str, newtons: f64) -> Self {
        self.table.insert(force_key(object), newtons);
        self
    }
}

impl ForcePredictor for FixtureForcePredictor {
    fn target_force(&self, object: &str) -> Result<f64, ProviderError> {
        self.table
            .get(&force_key(object))
            .copied()
            .ok_or_else(|| ProviderError::FixtureMissing(format!("force table entry '{object}'")))
    }
}

/// A scene fixture directory loaded into memory.
#[derive(Debug, Clone)]
pub struct SceneFixture {
    pub dir: PathBuf,
    pub scene: SceneDocument,
    pub mesh: TriangleMesh,
    pub hand: HandPoseEstimate,
    pub poses: PosesDocument,
    pub forces: FixtureForcePredictor,
}

pub(crate) fn read_fixture(dir: &Path, file: &str) -> Result<String, ProviderError> {
    let path = dir.join(file);
    std::fs::read_to_string(&path).map_err(|_| ProviderError::FixtureMissing(path.display().to_string()))
}

pub(crate) fn parse_fixture<T: serde::de::DeserializeOwned>(
    dir: &Path,
    file: &str,
) -> Result<T, ProviderError> {
    let text = read_fixture(dir, file)?;
    serde_json::from_str(&text).map_err(|e| ProviderError::invalid(&dir.join(file), e))
}

impl SceneFixture {
    pub fn load(dir: &Path) -> Result<Self, ProviderError> {
        if !dir.is_dir() {
            return Err(ProviderError::FixtureMissing(dir.display().to_string()));
        }
        let scene: SceneDocument = parse_fixture(dir, SCENE_FILE)?;
        let scene_path = dir.join(SCENE_FILE);
        if scene.name.trim().is_empty() {
            return Err(ProviderError::invalid(&scene_path, "scene name is empty"));
        }
        if !scene.intrinsics.is_valid() {
            return Err(ProviderError::invalid(&scene_path, "intrinsics must be positive"));
        }

        let mesh_path = dir.join(MESH_FILE);
        if !mesh_path.is_file() {
            return Err(ProviderError::FixtureMissing(mesh_path.display().to_string()));
        }
        let mesh = load_obj(&mesh_path, scene.mesh_scale).map_err(|e: MeshError| ProviderError::invalid(&mesh_path, e))?;

        let hand_doc: HandEstimateDocument = parse_fixture(dir, HAND_FILE)?;
        let hand = hand_from_document(&hand_doc).map_err(|m| ProviderError::invalid(&dir.join(HAND_FILE), m))?;

        let poses: PosesDocument = parse_fixture(dir, POSES_FILE)?;

        let mut forces = FixtureForcePredictor::bundled();
        if let Some(entry) = &scene.target_force {
            if !(entry.newtons.is_finite() && entry.newtons > 0.0) {
                return Err(ProviderError::invalid(&scene_path, "target force must be positive"));
            }
            forces = forces.with_entry(&entry.object, entry.newtons);
        }

        Ok(Self {
            dir: dir.to_path_buf(),
            scene,
            mesh,
            hand,
            poses,
            forces,
        })
    }

    pub fn observation_ref(&self) -> ImageRef {
        ImageRef(format!("{}/{}", self.scene.name, self.scene.observation_image))
    }

    pub fn generated_ref(&self) -> ImageRef {
        ImageRef(format!("{}/generated.png", self.scene.name))
    }

    pub fn observation(&self) -> SceneObservation {
        SceneObservation {
            rgb_image_ref: self.observation_ref(),
            intrinsics: self.scene.intrinsics,
            object_mesh: self.mesh.clone(),
            point_cloud_ref: self.scene.point_cloud.clone(),
        }
    }

    fn unknown(&self, image: &ImageRef) -> ProviderError {
        ProviderError::FixtureMissing(format!("no fixture answer for image '{image}'"))
    }
}

fn hand_from_document(doc: &HandEstimateDocument) -> Result<HandPoseEstimate, String> {
    let skeleton = bundled_model(&doc.skeleton).map_err(|e| e.to_string())?;
    let config = HandConfiguration::new(doc.root_pose, doc.joint_angles.clone());
    let mut hand = HandPoseEstimate::from_config(&skeleton, config, Frame::GeneratedCamera)
        .map_err(|e: KinematicsError| e.to_string())?;
    if let Some(kp) = &doc.keypoints {
        if kp.len() != skeleton.finger_count() {
            return Err(format!(
                "expected {} keypoints, found {}",
                skeleton.finger_count(),
                kp.len()
            ));
        }
        hand.fingertip_points = kp.iter().map(|p| Vector3::from(*p)).collect();
        hand.keypoints = KeypointSource::Fixture;
    }
    Ok(hand)
}

impl GraspImageProvider for SceneFixture {
    fn generate(
        &self,
        observation: &SceneObservation,
        _prompt: &PromptBundle,
    ) -> Result<ImageRef, ProviderError> {
        if observation.rgb_image_ref != self.observation_ref() {
            return Err(self.unknown(&observation.rgb_image_ref));
        }
        Ok(self.generated_ref())
    }
}

impl HandEstimator for SceneFixture {
    fn estimate_hand(&self, image: &ImageRef) -> Result<HandPoseEstimate, ProviderError> {
        if *image == self.generated_ref() {
            Ok(self.hand.clone())
        } else {
            Err(self.unknown(image))
        }
    }
}

impl ObjectPoseEstimator for SceneFixture {
    fn estimate_pose(&self, image: &ImageRef, _mesh: &TriangleMesh) -> Result<Pose, ProviderError> {
        if *image == self.generated_ref() {
            Ok(self.poses.object_gen)
        } else if *image == self.observation_ref() {
            Ok(self.poses.object_obs)
        } else {
            Err(self.unknown(image))
        }
    }
}

impl MeshProvider for SceneFixture {
    fn object_mesh(&self, image: &ImageRef) -> Result<TriangleMesh, ProviderError> {
        if *image == self.observation_ref() {
            Ok(self.mesh.clone())
        } else {
            Err(self.unknown(image))
        }
    }
}

impl ForcePredictor for SceneFixture {
    fn target_force(&self, object: &str) -> Result<f64, ProviderError> {
        self.forces.target_force(object)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_force_table_entries() {
        let f = FixtureForcePredictor::bundled();
        assert_eq!(f.target_force("paper cup").unwrap(), 2.0);
        assert_eq!(f.target_force("Steel Shaft ").unwrap(), 8.0);
        assert!(matches!(
            f.target_force("unobtainium"),
            Err(ProviderError::FixtureMissing(_))
        ));
    }

    #[test]
    fn scene_entry_extends_table() {
        let f = FixtureForcePredictor::bundled().with_entry("glass vase", 1.2);
        assert_eq!(f.target_force("glass vase").unwrap(), 1.2);
    }

    #[test]
    fn intrinsics_must_be_positive() {
        let ok = Intrinsics { fx: 600.0, fy: 600.0, cx: 320.0, cy: 240.0 };
        assert!(ok.is_valid());
        assert!(!Intrinsics { fx: 0.0, ..ok }.is_valid());
    }
}

//! Articulated hand models, forward kinematics and fingertip Jacobians.

mod fk;
mod model;

pub use fk::{
    apply_increment, clamp_to_limits, fingertip_jacobian, fingertip_jacobian_with_step,
    fingertips, forward_kinematics, FkResult, HandConfiguration, JACOBIAN_STEP,
};
pub use model::{
    HandModelDocument, HandModelError, Joint, JointDocument, JointMapEntry, KinematicHandModel,
    KinematicsError, Link, LinkDocument, Mimic, MimicDocument, ModelViolation,
};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;

pub const HUMAN_SKELETON: &str = "human-20dof";

const BUNDLED: [(&str, &str); 4] = [
    (
        "human-20dof",
        include_str!("../../fixtures/hands/human-20dof.json"),
    ),
    (
        "inspire-like-6dof",
        include_str!("../../fixtures/hands/inspire-like-6dof.json"),
    ),
    (
        "leap-like-16dof",
        include_str!("../../fixtures/hands/leap-like-16dof.json"),
    ),
    (
        "shadow-like-22dof",
        include_str!("../../fixtures/hands/shadow-like-22dof.json"),
    ),
];

pub fn bundled_model_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// Raw JSON of a bundled hand model document.
pub fn bundled_model_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn bundled_model(name: &str) -> Result<KinematicHandModel, KinematicsError> {
    let src =
        bundled_model_source(name).ok_or_else(|| KinematicsError::UnknownModel(name.to_string()))?;
    Ok(KinematicHandModel::from_json(src).expect("bundled hand models are valid"))
}

pub fn load_hand_model(document: &str) -> Result<KinematicHandModel, HandModelError> {
    KinematicHandModel::from_json(document)
}

/// Coordinate frame a pose or grasp is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Object,
    GeneratedCamera,
    RealCamera,
    Robot,
}

/// Where the fingertip points of a hand estimate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeypointSource {
    /// Derived by forward kinematics of `config`.
    Kinematic,
    /// Supplied independently by the estimator.
    Fixture,
}

/// Reconstructed human hand: wrist pose, joint angles and fingertip keypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandPoseEstimate {
    pub config: HandConfiguration,
    pub fingertip_points: Vec<Vector3<f64>>,
    pub skeleton: String,
    pub keypoints: KeypointSource,
    pub frame: Frame,
}

impl HandPoseEstimate {
    /// Builds an estimate whose keypoints are the FK fingertips of `config`.
    pub fn from_config(
        skeleton: &KinematicHandModel,
        config: HandConfiguration,
        frame: Frame,
    ) -> Result<Self, KinematicsError> {
        let fingertip_points = fingertips(skeleton, &config)?;
        Ok(Self {
            config,
            fingertip_points,
            skeleton: skeleton.name().to_string(),
            keypoints: KeypointSource::Kinematic,
            frame,
        })
    }

    /// Replaces the root pose, moving the keypoints with it.
    pub fn with_root(
        &self,
        skeleton: &KinematicHandModel,
        root_pose: Pose,
    ) -> Result<Self, KinematicsError> {
        let config = HandConfiguration::new(root_pose, self.config.joint_angles.clone());
        let fingertip_points = match self.keypoints {
            KeypointSource::Kinematic => fingertips(skeleton, &config)?,
            KeypointSource::Fixture => {
                let rel = root_pose.compose(&self.config.root_pose.inverse());
                self.fingertip_points
                    .iter()
                    .map(|p| rel.transform_point(p))
                    .collect()
            }
        };
        Ok(Self {
            config,
            fingertip_points,
            skeleton: self.skeleton.clone(),
            keypoints: self.keypoints,
            frame: self.frame,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn one_link_chain() -> KinematicHandModel {
        load_hand_model(
            r#"{
            "name": "one-link",
            "links": [
                {"name": "base", "parent": null},
                {"name": "arm", "parent": "base"},
                {"name": "tip", "parent": "arm", "offset": {"translation": [0.1, 0, 0]}},
                {"name": "stub", "parent": "base", "offset": {"translation": [0, 0, 0.05]}}
            ],
            "joints": [
                {"name": "j", "child": "arm", "axis": [0, 0, 1], "limits": [-3.0, 3.0]}
            ],
            "fingertip_links": ["tip", "stub"]
        }"#,
        )
        .unwrap()
    }

    fn fixed_chain() -> KinematicHandModel {
        load_hand_model(
            r#"{
            "name": "fixed",
            "links": [
                {"name": "base", "parent": null},
                {"name": "a", "parent": "base", "offset": {"translation": [0.1, 0, 0]}},
                {"name": "b", "parent": "base", "offset": {"translation": [0, 0.1, 0]}}
            ],
            "joints": [],
            "fingertip_links": ["a", "b"]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn bundled_models_load() {
        for name in bundled_model_names() {
            let m = bundled_model(name).unwrap();
            assert_eq!(m.name(), name);
        }
        let inspire = bundled_model("inspire-like-6dof").unwrap();
        assert_eq!(inspire.finger_count(), 5);
        assert_eq!(inspire.joint_count() - inspire.mimics().len(), 6);
        assert_eq!(bundled_model("human-20dof").unwrap().joint_count(), 20);
        assert_eq!(bundled_model("leap-like-16dof").unwrap().joint_count(), 16);
        assert_eq!(bundled_model("shadow-like-22dof").unwrap().joint_count(), 22);
        assert!(matches!(
            bundled_model("nope"),
            Err(KinematicsError::UnknownModel(_))
        ));
    }

    #[test]
    fn rest_pose_reproduces_recorded_fingertips() {
        for name in bundled_model_names() {
            let m = bundled_model(name).unwrap();
            let tips = fingertips(&m, &HandConfiguration::rest(&m, Pose::identity())).unwrap();
            for (a, b) in tips.iter().zip(m.rest_fingertips().unwrap()) {
                assert!((a - b).norm() < 1e-9, "{name}");
            }
        }
    }

    #[test]
    fn one_link_analytic_fk() {
        let m = one_link_chain();
        let cfg = HandConfiguration::new(Pose::identity(), vec![FRAC_PI_2]);
        let tip = fingertips(&m, &cfg).unwrap()[0];
        assert!((tip - Vector3::new(0.0, 0.1, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let m = one_link_chain();
        let cfg = HandConfiguration::new(Pose::identity(), vec![0.0, 1.0]);
        assert_eq!(
            forward_kinematics(&m, &cfg).unwrap_err(),
            KinematicsError::DimensionMismatch {
                expected: 1,
                got: 2
            }
        );
        assert!(fingertip_jacobian(&m, &cfg).is_err());
        assert!(clamp_to_limits(&m, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn fixed_chain_has_zero_jacobian_joint_block() {
        let m = fixed_chain();
        let jac = fingertip_jacobian(&m, &HandConfiguration::new(Pose::identity(), vec![])).unwrap();
        assert_eq!(jac.shape(), (6, 6));
        // only the wrist columns move a zero-DOF hand
        let m2 = one_link_chain();
        let cfg = HandConfiguration::new(Pose::identity(), vec![0.3]);
        let j2 = fingertip_jacobian(&m2, &cfg).unwrap();
        assert_eq!(j2.column(6).rows(3, 3).norm(), 0.0);
    }

    #[test]
    fn one_link_jacobian_matches_analytic_derivative() {
        let m = one_link_chain();
        for theta in [0.0, 0.7, -1.2] {
            let cfg = HandConfiguration::new(Pose::identity(), vec![theta]);
            let jac = fingertip_jacobian(&m, &cfg).unwrap();
            let expected = Vector3::new(-0.1 * f64::sin(theta), 0.1 * f64::cos(theta), 0.0);
            let got = Vector3::new(jac[(0, 6)], jac[(1, 6)], jac[(2, 6)]);
            assert!((got - expected).norm() < 1e-6);
        }
    }

    #[test]
    fn clamp_cases() {
        let m = bundled_model("leap-like-16dof").unwrap();
        let rest = m.rest_angles();
        assert_eq!(clamp_to_limits(&m, &rest).unwrap(), rest);
        let mut high = rest.clone();
        high[1] = 10.0;
        assert_eq!(clamp_to_limits(&m, &high).unwrap()[1], m.joints()[1].hi);
    }

    #[test]
    fn clamp_rederives_mimic_joints() {
        let m = bundled_model("inspire-like-6dof").unwrap();
        let driver = m.joint_by_name("index_proximal").unwrap();
        let follower = m.joint_by_name("index_intermediate").unwrap();
        let mut a = m.rest_angles();
        a[driver] = 1.0;
        a[follower] = 0.0;
        let c = clamp_to_limits(&m, &a).unwrap();
        assert!((c[follower] - 1.05).abs() < 1e-12);
    }

    #[test]
    fn bad_limits_rejected() {
        let err = load_hand_model(
            r#"{"name":"x","links":[{"name":"b","parent":null},{"name":"t","parent":"b"},{"name":"u","parent":"b"}],
            "joints":[{"name":"j","child":"t","axis":[0,0,1],"limits":[1.0,-1.0]}],
            "fingertip_links":["t","u"]}"#,
        )
        .unwrap_err();
        assert!(err.has(|v| matches!(v, ModelViolation::BadLimits { .. })));
    }

    #[test]
    fn two_roots_rejected() {
        let err = load_hand_model(
            r#"{"name":"x","links":[{"name":"a","parent":null},{"name":"b","parent":null}],
            "joints":[],"fingertip_links":["a","b"]}"#,
        )
        .unwrap_err();
        assert!(err.has(|v| matches!(
            v,
            ModelViolation::CyclicTree(_) | ModelViolation::SchemaError(_)
        )));
    }

    #[test]
    fn cycle_and_unknown_fingertip_all_listed() {
        let err = load_hand_model(
            r#"{"name":"x","links":[
                {"name":"r","parent":null},
                {"name":"a","parent":"b"},
                {"name":"b","parent":"a"}],
            "joints":[{"name":"j","child":"a","axis":[0,0,1],"limits":[0.5,1.0],"rest":0.0}],
            "fingertip_links":["r","ghost"]}"#,
        )
        .unwrap_err();
        assert!(err.has(|v| matches!(v, ModelViolation::CyclicTree(_))));
        assert!(err.has(|v| matches!(v, ModelViolation::UnknownFingertipLink(_))));
        assert!(err.has(|v| matches!(v, ModelViolation::BadLimits { .. })));
    }

    #[test]
    fn schema_errors_surface() {
        let err = load_hand_model(r#"{"name": "x"}"#).unwrap_err();
        assert!(err.has(|v| matches!(v, ModelViolation::SchemaError(_))));
    }

    #[test]
    fn finger_groups_partition_joints() {
        for name in bundled_model_names() {
            let m = bundled_model(name).unwrap();
            let groups = m.finger_joint_groups();
            let mut all: Vec<usize> = groups.concat();
            all.sort();
            assert_eq!(all, (0..m.joint_count()).collect::<Vec<_>>(), "{name}");
        }
    }
}

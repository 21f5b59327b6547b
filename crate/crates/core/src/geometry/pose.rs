use nalgebra::{Matrix4, Quaternion, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Rigid transform: `p' = R p + t`.
///
/// The rotation is kept as a unit quaternion and renormalized after every
/// composition so that long transform chains do not drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRecord", into = "PoseRecord")]
pub struct Pose {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

/// On-disk form of a [`Pose`]: quaternion `[w, x, y, z]` and translation in meters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseRecord {
    #[serde(default = "identity_wxyz")]
    pub rotation: [f64; 4],
    #[serde(default)]
    pub translation: [f64; 3],
}

fn identity_wxyz() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl TryFrom<PoseRecord> for Pose {
    type Error = String;

    fn try_from(r: PoseRecord) -> Result<Self, Self::Error> {
        let [w, x, y, z] = r.rotation;
        let q = Quaternion::new(w, x, y, z);
        let n = q.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(format!("rotation quaternion {:?} cannot be normalized", r.rotation));
        }
        if r.translation.iter().any(|v| !v.is_finite()) {
            return Err("translation must be finite".to_string());
        }
        Ok(Pose::from_parts(
            UnitQuaternion::new_normalize(q),
            Vector3::from(r.translation),
        ))
    }
}

impl From<Pose> for PoseRecord {
    fn from(p: Pose) -> Self {
        let q = p.rotation.quaternion();
        PoseRecord {
            rotation: [q.w, q.i, q.j, q.k],
            translation: p.translation.into(),
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_parts(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: renormalize(rotation),
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: UnitQuaternion<f64>) -> Self {
        Self::from_parts(rotation, Vector3::zeros())
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        Self::from_rotation(axis_angle(axis, angle))
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::z(), angle)
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// `self ∘ other`, i.e. the homogeneous product `self · other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: renormalize(self.rotation * other.rotation),
            translation: self.translation + self.rotation * other.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose {
            rotation: renormalize(inv),
            translation: -(inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn with_translation(&self, translation: Vector3<f64>) -> Pose {
        Pose {
            rotation: self.rotation,
            translation,
        }
    }

    /// Applies a world-frame increment: rotation `exp(omega)` about the pose
    /// origin followed by translation `delta`.
    pub fn perturbed(&self, omega: &Vector3<f64>, delta: &Vector3<f64>) -> Pose {
        Pose {
            rotation: renormalize(UnitQuaternion::from_scaled_axis(*omega) * self.rotation),
            translation: self.translation + delta,
        }
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        self.rotation
            .to_homogeneous()
            .append_translation(&self.translation)
    }

    /// Geodesic rotation angle between two poses, radians.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        self.rotation.angle_to(&other.rotation)
    }

    pub fn translation_distance(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }

    pub fn quaternion_norm(&self) -> f64 {
        self.rotation.quaternion().norm()
    }
}

pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> UnitQuaternion<f64> {
    match Unit::try_new(*axis, 1e-15) {
        Some(a) => UnitQuaternion::from_axis_angle(&a, angle),
        None => UnitQuaternion::identity(),
    }
}

fn renormalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::new_normalize(q.into_inner())
}

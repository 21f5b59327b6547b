use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::ReconstructionError;
use crate::geometry::{Pose, TriangleMesh};
use crate::kinematics::{Frame, HandPoseEstimate, KinematicHandModel};

/// Depth shifts are searched in `[-DEPTH_SEARCH_RANGE, DEPTH_SEARCH_RANGE]` metres.
pub const DEPTH_SEARCH_RANGE: f64 = 0.15;
pub const DEPTH_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_CONTACT_RADIUS: f64 = 0.03;

const COARSE_SAMPLES: usize = 301;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthAlignment {
    pub hand: HandPoseEstimate,
    /// Applied shift along the camera depth axis (m).
    pub shift: f64,
    pub objective_before: f64,
    pub objective_after: f64,
    pub contact_fingers: Vec<usize>,
}

fn check_skeleton(skeleton: &KinematicHandModel, hand: &HandPoseEstimate) -> Result<(), ReconstructionError> {
    if skeleton.name() != hand.skeleton {
        return Err(ReconstructionError::SkeletonMismatch {
            expected: skeleton.name().to_string(),
            got: hand.skeleton.clone(),
        });
    }
    Ok(())
}

fn check_frame(hand: &HandPoseEstimate, expected: Frame) -> Result<(), ReconstructionError> {
    if hand.frame != expected {
        return Err(ReconstructionError::WrongFrame { expected, got: hand.frame });
    }
    Ok(())
}

/// Fingers whose keypoint lies within `radius` of the surface (either side).
pub fn contact_fingers_within(
    hand: &HandPoseEstimate,
    mesh: &TriangleMesh,
    radius: f64,
) -> Result<Vec<usize>, ReconstructionError> {
    let mut out = Vec::new();
    for (i, p) in hand.fingertip_points.iter().enumerate() {
        if mesh.signed_distance(p)?.abs() <= radius {
            out.push(i);
        }
    }
    Ok(out)
}

/// Shifts the hand along the camera depth axis so the contact fingertips
/// sit on the object surface in the least-squares sense.
pub fn align_depth(
    skeleton: &KinematicHandModel,
    hand: &HandPoseEstimate,
    mesh_gen: &TriangleMesh,
    contact_fingers: &[usize],
) -> Result<DepthAlignment, ReconstructionError> {
    check_skeleton(skeleton, hand)?;
    check_frame(hand, Frame::GeneratedCamera)?;
    if contact_fingers.is_empty() {
        return Err(ReconstructionError::EmptyContactSet);
    }
    let count = hand.fingertip_points.len();
    if let Some(&index) = contact_fingers.iter().find(|&&i| i >= count) {
        return Err(ReconstructionError::FingerOutOfRange { index, count });
    }
    let tips: Vec<Vector3<f64>> = contact_fingers
        .iter()
        .map(|&i| hand.fingertip_points[i])
        .collect();
    let objective = |dz: f64| -> Result<f64, ReconstructionError> {
        let shift = Vector3::new(0.0, 0.0, dz);
        let mut sum = 0.0;
        for p in &tips {
            let d = mesh_gen.signed_distance(&(p + shift))?;
            sum += d * d;
        }
        Ok(sum)
    };

    let lo = -DEPTH_SEARCH_RANGE;
    let hi = DEPTH_SEARCH_RANGE;
    let step = (hi - lo) / (COARSE_SAMPLES - 1) as f64;
    let mut samples = Vec::with_capacity(COARSE_SAMPLES);
    for i in 0..COARSE_SAMPLES {
        let z = lo + step * i as f64;
        samples.push((z, objective(z)?));
    }
    if samples.iter().any(|(_, f)| !f.is_finite()) {
        return Err(ReconstructionError::NoConvergence(
            "objective is not finite over the search range".into(),
        ));
    }
    let fmin = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let fmax = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    if fmax - fmin < 1e-12 {
        return Err(ReconstructionError::NoConvergence(
            "objective is flat over the search range".into(),
        ));
    }
    // first minimum in scan order; ties resolve toward the smaller shift magnitude
    let mut best = 0;
    for (i, s) in samples.iter().enumerate() {
        let b = samples[best];
        if s.1 < b.1 || (s.1 == b.1 && s.0.abs() < b.0.abs()) {
            best = i;
        }
    }

    let mut a = (samples[best].0 - step).max(lo);
    let mut b = (samples[best].0 + step).min(hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while b - a > DEPTH_TOLERANCE {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = objective(d)?;
        }
    }
    let mut shift = 0.5 * (a + b);
    let mut after = objective(shift)?;
    if samples[best].1 < after {
        shift = samples[best].0;
        after = samples[best].1;
    }
    let before = objective(0.0)?;
    if after >= before {
        shift = 0.0;
        after = before;
    }

    let root = hand.config.root_pose;
    let moved = root.with_translation(root.translation() + Vector3::new(0.0, 0.0, shift));
    let aligned = hand.with_root(skeleton, moved)?;
    Ok(DepthAlignment {
        hand: aligned,
        shift,
        objective_before: before,
        objective_after: after,
        contact_fingers: contact_fingers.to_vec(),
    })
}

/// Re-expresses a generated-camera hand in the object frame.
pub fn to_object_frame(
    skeleton: &KinematicHandModel,
    t_o_gen: &Pose,
    hand: &HandPoseEstimate,
) -> Result<HandPoseEstimate, ReconstructionError> {
    check_skeleton(skeleton, hand)?;
    check_frame(hand, Frame::GeneratedCamera)?;
    let root = t_o_gen.inverse().compose(&hand.config.root_pose);
    let mut out = hand.with_root(skeleton, root)?;
    out.frame = Frame::Object;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::cuboid;
    use crate::kinematics::{bundled_model, HandConfiguration, HUMAN_SKELETON};

    fn hand_at(root: Pose) -> (KinematicHandModel, HandPoseEstimate) {
        let m = bundled_model(HUMAN_SKELETON).unwrap();
        let cfg = HandConfiguration::rest(&m, root);
        let h = HandPoseEstimate::from_config(&m, cfg, Frame::GeneratedCamera).unwrap();
        (m, h)
    }

    #[test]
    fn empty_contact_set_is_rejected() {
        let (m, h) = hand_at(Pose::identity());
        let mesh = cuboid(Vector3::new(0.05, 0.05, 0.05)).unwrap();
        assert_eq!(
            align_depth(&m, &h, &mesh, &[]),
            Err(ReconstructionError::EmptyContactSet)
        );
        assert!(matches!(
            align_depth(&m, &h, &mesh, &[7]),
            Err(ReconstructionError::FingerOutOfRange { index: 7, count: 5 })
        ));
    }

    #[test]
    fn object_frame_transform_applies_once() {
        let (m, h) = hand_at(Pose::from_translation(Vector3::new(0.0, 0.0, 0.4)));
        let t = Pose::from_translation(Vector3::new(0.0, 0.1, 0.5));
        let once = to_object_frame(&m, &t, &h).unwrap();
        assert_eq!(once.frame, Frame::Object);
        assert!(matches!(
            to_object_frame(&m, &t, &once),
            Err(ReconstructionError::WrongFrame { expected: Frame::GeneratedCamera, got: Frame::Object })
        ));
        let mesh = cuboid(Vector3::new(0.05, 0.05, 0.05)).unwrap();
        assert!(matches!(align_depth(&m, &once, &mesh, &[0]), Err(ReconstructionError::WrongFrame { .. })));
    }

    #[test]
    fn plane_offset_is_recovered() {
        // huge flat slab: top face at z = 0
        let mesh = cuboid(Vector3::new(5.0, 5.0, 0.5))
            .unwrap()
            .transformed(&Pose::from_translation(Vector3::new(0.0, 0.0, -0.5)));
        let (m, h) = hand_at(Pose::identity());
        let tip = h.fingertip_points[1];
        let root = Pose::from_translation(Vector3::new(0.0, 0.0, -tip.z + 0.04));
        let h = h.with_root(&m, root).unwrap();
        let res = align_depth(&m, &h, &mesh, &[1]).unwrap();
        assert!((res.shift + 0.04).abs() < 2e-5, "{}", res.shift);
        assert!(res.hand.fingertip_points[1].z.abs() < 2e-5);
        assert!(res.objective_after <= res.objective_before);
    }

    #[test]
    fn flat_objective_reports_no_convergence() {
        // a tall column beside the hand: depth shifts never change the distances
        let column = cuboid(Vector3::new(0.01, 0.01, 50.0))
            .unwrap()
            .transformed(&Pose::from_translation(Vector3::new(0.0, 0.5, 0.0)));
        let (m, h) = hand_at(Pose::identity());
        let r = align_depth(&m, &h, &column, &[0, 1]);
        assert!(matches!(r, Err(ReconstructionError::NoConvergence(_))), "{r:?}");
    }

    #[test]
    fn object_frame_round_trip() {
        let t = Pose::from_axis_angle(&Vector3::new(0.2, 1.0, -0.3), 0.8)
            .with_translation(Vector3::new(0.1, -0.2, 0.5));
        let (m, h) = hand_at(Pose::from_translation(Vector3::new(0.0, 0.1, 0.4)));
        let o = to_object_frame(&m, &t, &h).unwrap();
        assert_eq!(o.frame, Frame::Object);
        for (a, b) in o.fingertip_points.iter().zip(&h.fingertip_points) {
            assert!((t.transform_point(a) - b).norm() < 1e-12);
        }
    }
}

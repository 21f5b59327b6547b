mod common;

use common::{pose_matrix, random_angles, random_pose, MatrixChainOracle};
use dexgrasp::geometry::Pose;
use dexgrasp::kinematics::{
    apply_increment, bundled_model, bundled_model_names, bundled_model_source, clamp_to_limits,
    fingertip_jacobian, fingertip_jacobian_with_step, fingertips, HandConfiguration,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn fk_matches_matrix_chain_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for name in bundled_model_names() {
        let model = bundled_model(name).unwrap();
        let oracle = MatrixChainOracle::from_json(bundled_model_source(name).unwrap());
        for _ in 0..100 {
            let root = random_pose(&mut rng, 0.5);
            let angles = random_angles(&model, &mut rng);
            let got = fingertips(&model, &HandConfiguration::new(root, angles.clone())).unwrap();
            let expected = oracle.fingertips(&pose_matrix(&root), &angles);
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).norm() < 1e-9, "{name}: {g:?} vs {e:?}");
            }
        }
    }
}

#[test]
fn fk_is_deterministic_and_frame_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for name in bundled_model_names() {
        let model = bundled_model(name).unwrap();
        for _ in 0..20 {
            let angles = random_angles(&model, &mut rng);
            let root = random_pose(&mut rng, 1.0);
            let a = fingertips(&model, &HandConfiguration::new(root, angles.clone())).unwrap();
            let b = fingertips(&model, &HandConfiguration::new(root, angles.clone())).unwrap();
            assert_eq!(a, b);
            let local = fingertips(&model, &HandConfiguration::new(Pose::identity(), angles)).unwrap();
            for (w, l) in a.iter().zip(&local) {
                assert!((w - root.transform_point(l)).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn jacobian_step_halving_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in bundled_model_names() {
        let model = bundled_model(name).unwrap();
        let cfg = HandConfiguration::new(random_pose(&mut rng, 0.3), random_angles(&model, &mut rng));
        let j6 = fingertip_jacobian(&model, &cfg).unwrap();
        let j7 = fingertip_jacobian_with_step(&model, &cfg, 1e-7).unwrap();
        assert_eq!(j6.shape(), (3 * model.finger_count(), 6 + model.joint_count()));
        assert!((j6 - j7).amax() < 1e-4, "{name}");
    }
}

#[test]
fn jacobian_linearization_error_is_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for name in bundled_model_names() {
        let model = bundled_model(name).unwrap();
        for _ in 0..5 {
            let cfg = HandConfiguration::new(random_pose(&mut rng, 0.3), random_angles(&model, &mut rng));
            let jac = fingertip_jacobian(&model, &cfg).unwrap();
            let base = fingertips(&model, &cfg).unwrap();
            let n = jac.ncols();
            let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut pts = Vec::new();
            for scale in [1e-3, 1e-4, 1e-5] {
                let delta: Vec<f64> = dir.iter().map(|d| d / norm * scale).collect();
                let moved = fingertips(&model, &apply_increment(&cfg, &delta)).unwrap();
                let lin = &jac * DVector::from_vec(delta.clone());
                let mut err2 = 0.0;
                for f in 0..base.len() {
                    for r in 0..3 {
                        let e = moved[f][r] - base[f][r] - lin[3 * f + r];
                        err2 += e * e;
                    }
                }
                pts.push((scale.ln(), err2.sqrt().ln()));
            }
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            assert!(slope >= 1.9, "{name}: slope {slope}");
        }
    }
}

#[test]
fn clamp_matches_elementwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let model = bundled_model("shadow-like-22dof").unwrap();
    for _ in 0..50 {
        let raw: Vec<f64> = (0..model.joint_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = clamp_to_limits(&model, &raw).unwrap();
        for ((g, r), j) in got.iter().zip(&raw).zip(model.joints()) {
            assert_eq!(*g, r.min(j.hi).max(j.lo));
        }
    }
}

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GraspAction, RetargetError};
use crate::kinematics::{
    apply_increment, fingertip_jacobian, fingertips, HandConfiguration, KinematicHandModel,
};

/// Damped least-squares settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub initial_damping: f64,
    pub damping_increase: f64,
    pub damping_decrease: f64,
    pub max_damping: f64,
    /// Stop once an accepted step improves the objective by less than this (m²).
    pub min_improvement: f64,
    pub restarts: usize,
    pub restart_spread: f64,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            initial_damping: 1e-3,
            damping_increase: 10.0,
            damping_decrease: 10.0,
            max_damping: 1e10,
            min_improvement: 1e-10,
            restarts: 0,
            restart_spread: 0.2,
            seed: 0,
        }
    }
}

/// Objective value before the first and after every accepted step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RefineTrace {
    pub objective: Vec<f64>,
    pub iterations: usize,
}

pub fn fingertip_objective(
    model: &KinematicHandModel,
    config: &HandConfiguration,
    targets: &[Vector3<f64>],
) -> Result<f64, RetargetError> {
    let tips = fingertips(model, config)?;
    Ok(tips.iter().zip(targets).map(|(p, t)| (p - t).norm_squared()).sum())
}

pub fn refine_retarget(
    initial: &GraspAction,
    targets: &[Vector3<f64>],
    model: &KinematicHandModel,
    wrist_free: bool,
    settings: &SolverSettings,
) -> Result<GraspAction, RetargetError> {
    refine_retarget_traced(initial, targets, model, wrist_free, settings).map(|(g, _)| g)
}

pub fn refine_retarget_traced(
    initial: &GraspAction,
    targets: &[Vector3<f64>],
    model: &KinematicHandModel,
    wrist_free: bool,
    settings: &SolverSettings,
) -> Result<(GraspAction, RefineTrace), RetargetError> {
    initial.require_model(model)?;
    model.check_len(initial.config.joint_angles.len())?;
    if targets.len() != model.finger_count() {
        return Err(RetargetError::TargetCount {
            expected: model.finger_count(),
            got: targets.len(),
        });
    }
    let start = HandConfiguration::new(
        initial.config.root_pose,
        model.clamp_to_limits(&initial.config.joint_angles)?,
    );
    let (mut best, mut trace) = descend(&start, targets, model, wrist_free, settings)?;

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    for _ in 0..settings.restarts {
        let angles: Vec<f64> = start
            .joint_angles
            .iter()
            .map(|a| a + rng.random_range(-settings.restart_spread..=settings.restart_spread))
            .collect();
        let seed = HandConfiguration::new(start.root_pose, model.clamp_to_limits(&angles)?);
        let (cand, cand_trace) = descend(&seed, targets, model, wrist_free, settings)?;
        if cand_trace.objective.last() < trace.objective.last() {
            best = cand;
            trace = cand_trace;
        }
    }

    let tips = fingertips(model, &best)?;
    let residual = tips.iter().zip(targets).map(|(p, t)| (p - t).norm()).collect();
    Ok((
        GraspAction {
            hand_model: initial.hand_model.clone(),
            config: best,
            frame: initial.frame,
            residual,
        },
        trace,
    ))
}

fn descend(
    start: &HandConfiguration,
    targets: &[Vector3<f64>],
    model: &KinematicHandModel,
    wrist_free: bool,
    s: &SolverSettings,
) -> Result<(HandConfiguration, RefineTrace), RetargetError> {
    let n = 6 + model.joint_count();
    let active: Vec<usize> = (0..n)
        .filter(|&c| if c < 6 { wrist_free } else { !model.is_mimic(c - 6) })
        .collect();
    let mut config = start.clone();
    let mut f = fingertip_objective(model, &config, targets)?;
    let mut trace = RefineTrace {
        objective: vec![f],
        iterations: 0,
    };
    if active.is_empty() {
        return Ok((config, trace));
    }
    let mut lambda = s.initial_damping;

    while trace.iterations < s.max_iterations && f > 0.0 {
        trace.iterations += 1;
        let tips = fingertips(model, &config)?;
        let mut r = DVector::zeros(3 * tips.len());
        for (k, (p, t)) in tips.iter().zip(targets).enumerate() {
            r.fixed_rows_mut::<3>(3 * k).copy_from(&(p - t));
        }
        let full = fingertip_jacobian(model, &config)?;
        let jac = DMatrix::from_fn(full.nrows(), active.len(), |i, c| full[(i, active[c])]);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;

        let mut accepted = None;
        while lambda <= s.max_damping {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda;
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= s.damping_increase;
                    continue;
                }
            };
            let mut delta = vec![0.0; n];
            for (c, &col) in active.iter().enumerate() {
                delta[col] = step[c];
            }
            let moved = apply_increment(&config, &delta);
            let cand = HandConfiguration::new(
                moved.root_pose,
                model.clamp_to_limits(&moved.joint_angles)?,
            );
            let fc = fingertip_objective(model, &cand, targets)?;
            if fc < f {
                lambda = (lambda / s.damping_decrease).max(1e-12);
                accepted = Some((cand, fc));
                break;
            }
            lambda *= s.damping_increase;
        }
        let Some((cand, fc)) = accepted else { break };
        let improvement = f - fc;
        config = cand;
        f = fc;
        trace.objective.push(f);
        if improvement < s.min_improvement {
            break;
        }
    }
    Ok((config, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use crate::kinematics::{bundled_model, Frame};

    fn grasp(model: &KinematicHandModel, config: HandConfiguration) -> GraspAction {
        GraspAction {
            hand_model: model.name().into(),
            config,
            frame: Frame::Object,
            residual: vec![],
        }
    }

    #[test]
    fn already_optimal_is_unchanged() {
        let model = bundled_model("shadow-like-22dof").unwrap();
        let cfg = HandConfiguration::rest(&model, Pose::from_translation(Vector3::new(0.0, 0.0, 0.3)));
        let targets = fingertips(&model, &cfg).unwrap();
        let (out, trace) =
            refine_retarget_traced(&grasp(&model, cfg.clone()), &targets, &model, true, &SolverSettings::default()).unwrap();
        assert_eq!(out.config, cfg);
        assert_eq!(trace.objective, vec![0.0]);
        assert!(out.residual.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn unreachable_targets_do_not_increase_objective() {
        let model = bundled_model("leap-like-16dof").unwrap();
        let cfg = HandConfiguration::rest(&model, Pose::identity());
        let targets: Vec<_> = fingertips(&model, &cfg)
            .unwrap()
            .iter()
            .map(|p| p + Vector3::new(1.0, 0.0, 0.0) * (1.0 + p.y))
            .collect();
        let start = fingertip_objective(&model, &cfg, &targets).unwrap();
        let (out, trace) =
            refine_retarget_traced(&grasp(&model, cfg), &targets, &model, false, &SolverSettings::default()).unwrap();
        assert!(*trace.objective.last().unwrap() <= start);
        assert!(trace.objective.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.residual.iter().all(|r| *r > 0.0));
        assert!(model.within_limits(&out.config.joint_angles, 0.0));
        assert_eq!(out.config.root_pose, Pose::identity());
    }

    #[test]
    fn wrong_target_count() {
        let model = bundled_model("leap-like-16dof").unwrap();
        let cfg = HandConfiguration::rest(&model, Pose::identity());
        assert!(matches!(
            refine_retarget(&grasp(&model, cfg), &[Vector3::zeros()], &model, true, &SolverSettings::default()),
            Err(RetargetError::TargetCount { expected: 4, got: 1 })
        ));
    }
}

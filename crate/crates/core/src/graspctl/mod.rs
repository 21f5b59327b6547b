//! Force-constrained closing from pre-grasp toward squeeze with a simulated
//! spring contact.

mod contact;
mod controller;

pub use contact::{
    sense_force, sense_force_noisy, ClosingPath, ContactModel, ContactSpec, FingerContactModel,
    FingerMaterial, CONTACT_FILE,
};
pub use controller::{controller_step, ControllerState, ForceReading, Gains};

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::MeshError;
use crate::kinematics::{KinematicHandModel, KinematicsError};
use crate::retarget::GraspAction;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraspError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("controller gains must be non-negative")]
    NegativeGain,
    #[error("contact stiffness must be positive, got {0}")]
    NonPositiveStiffness(f64),
    #[error("invalid noise level {0}")]
    BadNoise(f64),
    #[error("target force must be positive, got {0}")]
    BadTargetForce(f64),
    #[error("pre-grasp and squeeze belong to different hand models ('{0}' vs '{1}')")]
    ModelMismatch(String, String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub gains: Gains,
    pub dt: f64,
    pub max_steps: usize,
    pub lock_enabled: bool,
    /// Stable band as fractions of the target force.
    pub force_band: [f64; 2],
    pub min_stable_fingers: usize,
    /// Episode ends once no joint moves more than this in a step (rad).
    pub settle_tolerance: f64,
    pub noise_seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            gains: Gains::default(),
            dt: 0.01,
            max_steps: 1000,
            lock_enabled: true,
            force_band: [0.7, 1.1],
            min_stable_fingers: 3,
            settle_tolerance: 1e-10,
            noise_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Damaged,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Damaged => "damaged",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerOutcome {
    pub final_force: f64,
    pub peak_force: f64,
    pub locked: bool,
    pub lock_step: Option<usize>,
    /// Largest joint-velocity command norm seen (rad/s).
    pub max_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    /// Closing coordinate per finger (rad).
    pub positions: Vec<f64>,
    pub forces: Vec<f64>,
    /// Closing coordinate of each finger's current target.
    pub targets: Vec<f64>,
    pub locked: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspExecutionResult {
    pub verdict: Verdict,
    pub fingers: Vec<FingerOutcome>,
    pub final_angles: Vec<f64>,
    pub steps: usize,
    pub trace: Vec<TraceRow>,
}

impl GraspExecutionResult {
    pub fn final_forces(&self) -> Vec<f64> {
        self.fingers.iter().map(|f| f.final_force).collect()
    }

    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let k = self.fingers.len();
        let mut header = vec!["step".to_string(), "time".to_string()];
        for i in 0..k {
            header.extend([format!("position_{i}"), format!("force_{i}"), format!("target_{i}"), format!("locked_{i}")]);
        }
        w.write_record(&header)?;
        for row in &self.trace {
            let mut rec = vec![row.step.to_string(), format!("{:.6}", row.time)];
            for i in 0..k {
                rec.push(format!("{:.9}", row.positions[i]));
                rec.push(format!("{:.9}", row.forces[i]));
                rec.push(format!("{:.9}", row.targets[i]));
                rec.push((row.locked[i] as u8).to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates closing from `pre` toward `squeeze` under force-constrained PD control.
pub fn run_grasp(
    pre: &GraspAction,
    squeeze: &GraspAction,
    model: &KinematicHandModel,
    contact: &ContactModel,
    f_target: f64,
    settings: &RunSettings,
) -> Result<GraspExecutionResult, GraspError> {
    for g in [pre, squeeze] {
        if g.hand_model != model.name() {
            return Err(GraspError::ModelMismatch(model.name().to_string(), g.hand_model.clone()));
        }
    }
    if !(f_target > 0.0 && f_target.is_finite()) {
        return Err(GraspError::BadTargetForce(f_target));
    }
    let k = model.finger_count();
    if contact.fingers.len() != k {
        return Err(GraspError::DimensionMismatch { expected: k, got: contact.fingers.len() });
    }
    let squeeze_q = &squeeze.config.joint_angles;
    let path = ClosingPath::new(model, &pre.config.joint_angles, squeeze_q)?;
    let mut state = ControllerState::new(model.finger_joint_groups(), settings.gains, settings.dt)?;
    state.lock_enabled = settings.lock_enabled;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.noise_seed);

    let mut q = pre.config.joint_angles.clone();
    let mut peak = vec![0.0f64; k];
    let mut max_rate = vec![0.0f64; k];
    let mut lock_step = vec![None; k];
    let mut trace = Vec::new();
    let mut steps = 0;

    while steps < settings.max_steps {
        let s = path.coordinates(&q);
        let forces = sense_force_noisy(contact, &s, &mut rng)?;
        for (p, f) in peak.iter_mut().zip(&forces) {
            *p = p.max(*f);
        }
        let u = controller_step(&mut state, &q, squeeze_q, &ForceReading(forces.clone()), f_target)?;
        for (i, l) in state.locked.iter().enumerate() {
            if *l && lock_step[i].is_none() {
                lock_step[i] = Some(steps);
            }
        }
        trace.push(TraceRow {
            step: steps,
            time: steps as f64 * settings.dt,
            positions: s,
            forces,
            targets: path.coordinates(&state.targets(squeeze_q)),
            locked: state.locked.clone(),
        });
        for (i, group) in state.groups.iter().enumerate() {
            let rate = group.iter().map(|&j| u[j] * u[j]).sum::<f64>().sqrt();
            max_rate[i] = max_rate[i].max(rate);
        }
        let mut moved = 0.0f64;
        for (qj, uj) in q.iter_mut().zip(&u) {
            *qj += uj * settings.dt;
            moved = moved.max((uj * settings.dt).abs());
        }
        q = model.clamp_to_limits(&q)?;
        steps += 1;
        if moved < settings.settle_tolerance {
            break;
        }
    }

    let s = path.coordinates(&q);
    let final_forces = sense_force_noisy(contact, &s, &mut rng)?;
    let fingers: Vec<FingerOutcome> = (0..k)
        .map(|i| FingerOutcome {
            final_force: final_forces[i],
            peak_force: peak[i].max(final_forces[i]),
            locked: state.locked[i],
            lock_step: lock_step[i],
            max_rate: max_rate[i],
        })
        .collect();
    trace.push(TraceRow {
        step: steps,
        time: steps as f64 * settings.dt,
        positions: s,
        forces: final_forces,
        targets: path.coordinates(&state.targets(squeeze_q)),
        locked: state.locked.clone(),
    });

    let damaged = fingers
        .iter()
        .zip(&contact.fingers)
        .any(|(o, c)| c.yield_force.is_some_and(|y| o.peak_force > y));
    let [lo, hi] = settings.force_band;
    let in_band = fingers
        .iter()
        .filter(|o| o.final_force > 0.0 && o.final_force >= lo * f_target && o.final_force <= hi * f_target)
        .count();
    let verdict = if damaged {
        Verdict::Damaged
    } else if in_band >= settings.min_stable_fingers {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    Ok(GraspExecutionResult { verdict, fingers, final_angles: q, steps, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use crate::kinematics::{bundled_model, Frame, HandConfiguration};

    fn pair(model: &KinematicHandModel) -> (GraspAction, GraspAction) {
        let pre = model.rest_angles();
        let squeeze: Vec<f64> = model
            .joints()
            .iter()
            .zip(&pre)
            .map(|(j, r)| (r + 0.12).min(j.hi))
            .collect();
        let squeeze = model.clamp_to_limits(&squeeze).unwrap();
        let mk = |q: Vec<f64>| GraspAction {
            hand_model: model.name().into(),
            config: HandConfiguration::new(Pose::identity(), q),
            frame: Frame::Object,
            residual: vec![],
        };
        (mk(pre), mk(squeeze))
    }

    #[test]
    fn no_contact_reaches_squeeze() {
        let model = bundled_model("leap-like-16dof").unwrap();
        let (pre, squ) = pair(&model);
        let contact = ContactModel::uniform(None, 20.0, None, 4).unwrap();
        let r = run_grasp(&pre, &squ, &model, &contact, 2.0, &RunSettings::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        for (a, b) in r.final_angles.iter().zip(&squ.config.joint_angles) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(r.fingers.iter().all(|f| f.final_force == 0.0 && !f.locked));
    }

    #[test]
    fn midway_contact_locks_near_target() {
        let model = bundled_model("shadow-like-22dof").unwrap();
        let (pre, squ) = pair(&model);
        let path = ClosingPath::new(&model, &pre.config.joint_angles, &squ.config.joint_angles).unwrap();
        let fingers = path
            .lengths
            .iter()
            .map(|l| FingerContactModel { engagement: Some(0.5 * l), stiffness: 20.0, yield_force: None })
            .collect();
        let contact = ContactModel::new(fingers).unwrap();
        let r = run_grasp(&pre, &squ, &model, &contact, 2.0, &RunSettings::default()).unwrap();
        for f in &r.fingers {
            assert!(f.locked);
            assert!((1.8..=2.2).contains(&f.final_force), "{}", f.final_force);
            assert!(f.peak_force <= 2.0 + 20.0 * f.max_rate * 0.01 + 1e-12);
        }
        assert_eq!(r.verdict, Verdict::Stable);
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,time,position_0,force_0,target_0,locked_0"));
        assert_eq!(text.lines().count(), r.trace.len() + 1);
    }
}

use serde::{Deserialize, Serialize};

use super::GraspError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gains {
    pub kp: f64,
    pub kd: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self { kp: 5.0, kd: 0.1 }
    }
}

/// Per-finger force in newtons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceReading(pub Vec<f64>);

/// PD controller memory for one grasp episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    /// Joint indices driven by each finger.
    pub groups: Vec<Vec<usize>>,
    pub locked: Vec<bool>,
    /// Joint values held by a locked finger, in group order.
    pub locked_position: Vec<Option<Vec<f64>>>,
    pub last_error: Option<Vec<f64>>,
    pub gains: Gains,
    pub dt: f64,
    pub lock_enabled: bool,
}

impl ControllerState {
    pub fn new(groups: Vec<Vec<usize>>, gains: Gains, dt: f64) -> Result<Self, GraspError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GraspError::NonPositiveDt(dt));
        }
        if !(gains.kp >= 0.0 && gains.kd >= 0.0) {
            return Err(GraspError::NegativeGain);
        }
        let k = groups.len();
        Ok(Self {
            groups,
            locked: vec![false; k],
            locked_position: vec![None; k],
            last_error: None,
            gains,
            dt,
            lock_enabled: true,
        })
    }

    pub fn joint_count(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }

    /// Current setpoint for every joint.
    pub fn targets(&self, squeeze_target: &[f64]) -> Vec<f64> {
        let mut target = squeeze_target.to_vec();
        for (k, group) in self.groups.iter().enumerate() {
            if let Some(held) = &self.locked_position[k] {
                for (&j, v) in group.iter().zip(held) {
                    target[j] = *v;
                }
            }
        }
        target
    }
}

/// One PD update. Returns the joint-velocity command.
///
/// A finger whose force reaches `f_target` latches its current position as
/// its target for the rest of the episode. The error history of a finger is
/// re-referenced to its new target when it latches, so the switch itself does
/// not produce a derivative kick; only the braking transient remains.
pub fn controller_step(
    state: &mut ControllerState,
    current: &[f64],
    squeeze_target: &[f64],
    force: &ForceReading,
    f_target: f64,
) -> Result<Vec<f64>, GraspError> {
    let n = state.joint_count();
    for (expected, got) in [
        (n, current.len()),
        (n, squeeze_target.len()),
        (state.groups.len(), force.0.len()),
    ] {
        if expected != got {
            return Err(GraspError::DimensionMismatch { expected, got });
        }
    }
    if let Some(prev) = &state.last_error {
        if prev.len() != n {
            return Err(GraspError::DimensionMismatch { expected: n, got: prev.len() });
        }
    }

    let before = state.targets(squeeze_target);
    if state.lock_enabled {
        for (k, group) in state.groups.iter().enumerate() {
            if !state.locked[k] && force.0[k] >= f_target {
                state.locked[k] = true;
                state.locked_position[k] = Some(group.iter().map(|&j| current[j]).collect());
            }
        }
    }
    let target = state.targets(squeeze_target);

    let error: Vec<f64> = target.iter().zip(current).map(|(t, q)| t - q).collect();
    let prev: Vec<f64> = match &state.last_error {
        Some(e) => e
            .iter()
            .zip(target.iter().zip(&before))
            .map(|(e, (t, b))| e + (t - b))
            .collect(),
        None => error.clone(),
    };
    let Gains { kp, kd } = state.gains;
    let u = error
        .iter()
        .zip(&prev)
        .map(|(e, p)| kp * e + kd * (e - p) / state.dt)
        .collect();
    state.last_error = Some(error);
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> ControllerState {
        ControllerState::new(vec![vec![0, 1], vec![2]], Gains::default(), 0.01).unwrap()
    }

    #[test]
    fn free_finger_heads_to_squeeze() {
        let mut s = state();
        let u = controller_step(&mut s, &[0.0; 3], &[1.0, 0.5, 0.2], &ForceReading(vec![0.0, 0.0]), 2.0).unwrap();
        assert_eq!(u, vec![5.0, 2.5, 1.0]);
        assert!(!s.locked.iter().any(|l| *l));
    }

    #[test]
    fn at_squeeze_command_is_zero() {
        let mut s = state();
        let q = [1.0, 0.5, 0.2];
        let u = controller_step(&mut s, &q, &q, &ForceReading(vec![0.0, 0.0]), 2.0).unwrap();
        assert_eq!(u, vec![0.0; 3]);
    }

    #[test]
    fn lock_brakes_then_holds() {
        let mut s = state();
        let squeeze = [1.0, 1.0, 1.0];
        controller_step(&mut s, &[0.0; 3], &squeeze, &ForceReading(vec![0.0, 0.0]), 2.0).unwrap();
        // finger 0 moved by 0.05 and now senses the target force
        let q = [0.05, 0.05, 0.05];
        let u = controller_step(&mut s, &q, &squeeze, &ForceReading(vec![2.0, 0.0]), 2.0).unwrap();
        assert!(s.locked[0] && !s.locked[1]);
        assert_eq!(s.locked_position[0], Some(vec![0.05, 0.05]));
        // braking transient: -kd * velocity
        assert!((u[0] + 0.1 * 0.05 / 0.01).abs() < 1e-12);
        assert!(u[2] > 0.0);
        // lock persists when force drops
        controller_step(&mut s, &q, &squeeze, &ForceReading(vec![0.0, 0.0]), 2.0).unwrap();
        assert!(s.locked[0]);
        assert_eq!(s.targets(&squeeze)[0], 0.05);
    }

    #[test]
    fn dimension_and_dt_checks() {
        let mut s = state();
        assert!(matches!(
            controller_step(&mut s, &[0.0; 2], &[0.0; 3], &ForceReading(vec![0.0; 2]), 1.0),
            Err(GraspError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ControllerState::new(vec![], Gains::default(), 0.0),
            Err(GraspError::NonPositiveDt(_))
        ));
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::reconstruction::{parse_fixture, ProviderError};
use crate::retarget::{to_robot_frame, GraspAction, RetargetError};

pub const TRAJECTORY_FILE: &str = "trajectory.json";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("timestamps must be strictly increasing (sample {0})")]
    NonIncreasingTime(usize),
    #[error(transparent)]
    Retarget(#[from] RetargetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySample {
    pub time: f64,
    /// Object pose in the real camera frame.
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectTrajectory {
    pub samples: Vec<TrajectorySample>,
}

impl ObjectTrajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self, TrajectoryError> {
        let t = Self { samples };
        t.check()?;
        Ok(t)
    }

    pub fn check(&self) -> Result<(), TrajectoryError> {
        if self.samples.is_empty() {
            return Err(TrajectoryError::EmptyTrajectory);
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            if w[1].time.partial_cmp(&w[0].time) != Some(std::cmp::Ordering::Greater) {
                return Err(TrajectoryError::NonIncreasingTime(i + 1));
            }
        }
        Ok(())
    }
}

/// Reads `trajectory.json` if the scene has one.
pub fn load_trajectory(dir: &Path) -> Result<Option<ObjectTrajectory>, ProviderError> {
    if !dir.join(TRAJECTORY_FILE).is_file() {
        return Ok(None);
    }
    let t: ObjectTrajectory = parse_fixture(dir, TRAJECTORY_FILE)?;
    t.check().map_err(|e| ProviderError::Invalid {
        path: dir.join(TRAJECTORY_FILE).display().to_string(),
        message: e.to_string(),
    })?;
    Ok(Some(t))
}

/// Robot-frame grasps that keep the hand rigidly attached to the tracked object.
pub fn manipulation_trajectory(
    grasp_obj: &GraspAction,
    traj: &ObjectTrajectory,
    hand_eye: &Pose,
) -> Result<Vec<GraspAction>, TrajectoryError> {
    traj.check()?;
    traj.samples
        .iter()
        .map(|s| Ok(to_robot_frame(grasp_obj, &s.pose, hand_eye)?))
        .collect()
}

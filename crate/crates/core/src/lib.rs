pub mod cli;
pub mod geometry;
pub mod graspctl;
pub mod kinematics;
pub mod pipeline;
pub mod reconstruction;
pub mod retarget;

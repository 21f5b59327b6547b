use serde::{Deserialize, Serialize};

use super::solver::{refine_retarget, SolverSettings};
use super::{GraspAction, RetargetError};
use crate::geometry::{SurfaceContact, TriangleMesh};
use crate::kinematics::{Frame, KinematicHandModel};

pub const PREGRASP_OFFSET: f64 = 0.05;
pub const SQUEEZE_OFFSET: f64 = -0.01;
/// Fingertips within this signed distance of the surface count as contacts (m).
pub const DEFAULT_ENGAGE_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerContact {
    pub contact: SurfaceContact,
    pub engaged: bool,
}

/// One entry per fingertip of the hand model, in fingertip order.
pub type ContactSet = Vec<FingerContact>;

pub fn compute_contacts(
    grasp: &GraspAction,
    model: &KinematicHandModel,
    mesh: &TriangleMesh,
    engage_threshold: f64,
) -> Result<ContactSet, RetargetError> {
    grasp.require_frame(Frame::Object)?;
    grasp.require_model(model)?;
    grasp
        .fingertips(model)?
        .iter()
        .map(|p| {
            let contact = mesh.nearest_surface_point(p)?;
            Ok(FingerContact {
                engaged: contact.distance <= engage_threshold,
                contact,
            })
        })
        .collect()
}

/// Re-solves the fingers with the wrist held fixed so that every engaged
/// fingertip lands `offset` metres along its contact normal.
pub fn make_offset_grasp(
    grasp: &GraspAction,
    mesh: &TriangleMesh,
    model: &KinematicHandModel,
    offset: f64,
    engage_threshold: f64,
    settings: &SolverSettings,
) -> Result<GraspAction, RetargetError> {
    let contacts = compute_contacts(grasp, model, mesh, engage_threshold)?;
    let tips = grasp.fingertips(model)?;
    if contacts.iter().all(|c| !c.engaged) {
        let mut out = grasp.clone();
        out.residual = vec![0.0; tips.len()];
        return Ok(out);
    }
    let targets: Vec<_> = contacts
        .iter()
        .zip(&tips)
        .map(|(c, tip)| {
            if c.engaged {
                c.contact.point + offset * c.contact.normal
            } else {
                *tip
            }
        })
        .collect();
    let mut out = refine_retarget(grasp, &targets, model, false, settings)?;
    out.config.root_pose = grasp.config.root_pose;
    Ok(out)
}

pub fn make_pregrasp(
    grasp: &GraspAction,
    mesh: &TriangleMesh,
    model: &KinematicHandModel,
) -> Result<GraspAction, RetargetError> {
    make_offset_grasp(
        grasp,
        mesh,
        model,
        PREGRASP_OFFSET,
        DEFAULT_ENGAGE_THRESHOLD,
        &SolverSettings::default(),
    )
}

pub fn make_squeeze(
    grasp: &GraspAction,
    mesh: &TriangleMesh,
    model: &KinematicHandModel,
) -> Result<GraspAction, RetargetError> {
    make_offset_grasp(
        grasp,
        mesh,
        model,
        SQUEEZE_OFFSET,
        DEFAULT_ENGAGE_THRESHOLD,
        &SolverSettings::default(),
    )
}

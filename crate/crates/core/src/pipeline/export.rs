use nalgebra::Vector3;

use super::PipelineRun;
use crate::geometry::write_obj;
use crate::kinematics::fingertips;
use crate::retarget::GraspAction;

fn labelled(prefix: &str, points: &[Vector3<f64>]) -> Vec<(String, Vector3<f64>)> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("{prefix}_{i}"), *p))
        .collect()
}

/// OBJ snapshots (object mesh plus hand keypoints) for each geometric stage,
/// as `(file name, contents)` pairs.
pub fn stage_snapshots(run: &PipelineRun) -> Vec<(String, String)> {
    let r = &run.report;
    let mut out = Vec::new();
    let mesh_gen = run.mesh.transformed(&run.t_o_gen);
    out.push((
        "providers.obj".to_string(),
        write_obj(&mesh_gen, &labelled("human", &run.human_generated.fingertip_points)),
    ));
    out.push((
        "align_depth.obj".to_string(),
        write_obj(&mesh_gen, &labelled("human", &run.human_aligned.fingertip_points)),
    ));
    out.push((
        "to_object_frame.obj".to_string(),
        write_obj(&run.mesh, &labelled("human", &r.human_object.fingertip_points)),
    ));
    let tips = |g: &GraspAction| fingertips(&run.model, &g.config).unwrap_or_default();
    out.push(("retarget.obj".to_string(), write_obj(&run.mesh, &labelled("dex", &tips(&r.grasp_object)))));
    out.push(("pregrasp.obj".to_string(), write_obj(&run.mesh, &labelled("dex", &tips(&r.pregrasp)))));
    out.push(("squeeze.obj".to_string(), write_obj(&run.mesh, &labelled("dex", &tips(&r.squeeze)))));
    let mesh_robot = run.mesh.transformed(&run.hand_eye.compose(&run.t_o_obs));
    let mut pts = labelled("stage1", &tips(&r.plan.stage1));
    pts.extend(labelled("stage2", &tips(&r.plan.stage2)));
    out.push(("two_stage.obj".to_string(), write_obj(&mesh_robot, &pts)));
    out
}

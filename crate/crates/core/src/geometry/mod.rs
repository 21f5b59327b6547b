//! Rigid transforms and triangle-mesh surface queries.

mod mesh;
mod obj;
mod pose;
pub mod primitives;

pub use mesh::{MeshError, MeshIssue, SurfaceContact, TriangleMesh};
pub use obj::{load_obj, parse_obj, write_obj};
pub use pose::{axis_angle, Pose, PoseRecord};

use nalgebra::Vector3;

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn invert(t: &Pose) -> Pose {
    t.inverse()
}

pub fn transform_point(t: &Pose, p: &Vector3<f64>) -> Vector3<f64> {
    t.transform_point(p)
}

pub fn nearest_surface_point(
    mesh: &TriangleMesh,
    p: &Vector3<f64>,
) -> Result<SurfaceContact, MeshError> {
    mesh.nearest_surface_point(p)
}

pub fn signed_distance(mesh: &TriangleMesh, p: &Vector3<f64>) -> Result<f64, MeshError> {
    mesh.signed_distance(p)
}

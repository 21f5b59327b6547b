use std::collections::HashMap;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::pose::Pose;

/// Twice-area threshold below which a triangle counts as degenerate (m²).
const DEGENERATE_CROSS_NORM: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("mesh scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("{}", join_issues(.0))]
    Invalid(Vec<MeshIssue>),
    #[error("cannot read mesh {path}: {message}")]
    Io { path: String, message: String },
}

fn join_issues(issues: &[MeshIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// One problem found while loading or validating a mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshIssue {
    Parse { line: usize, message: String },
    NonTriangularFace { face: usize, line: usize, vertices: usize },
    IndexOutOfRange { face: usize, index: i64 },
    DegenerateTriangle { face: usize },
    NonFiniteVertex { vertex: usize },
}

impl fmt::Display for MeshIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshIssue::Parse { line, message } => write!(f, "line {line}: {message}"),
            MeshIssue::NonTriangularFace { face, line, vertices } => write!(
                f,
                "face {face} (line {line}) has {vertices} vertices; only triangles are accepted"
            ),
            MeshIssue::IndexOutOfRange { face, index } => {
                write!(f, "face {face} references vertex {index} which does not exist")
            }
            MeshIssue::DegenerateTriangle { face } => write!(f, "face {face} has zero area"),
            MeshIssue::NonFiniteVertex { vertex } => {
                write!(f, "vertex {vertex} has a non-finite coordinate")
            }
        }
    }
}

/// Closest point on a mesh surface to a query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceContact {
    pub point: Vector3<f64>,
    /// Outward unit normal at `point` (pseudonormal at edges and vertices).
    pub normal: Vector3<f64>,
    /// Signed distance from the query point; negative inside.
    pub distance: f64,
    pub triangle: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Feature {
    Face,
    /// Local edge index: 0 = (a,b), 1 = (b,c), 2 = (c,a).
    Edge(usize),
    /// Local vertex index.
    Vertex(usize),
}

/// Indexed triangle mesh in meters with precomputed normals and pseudonormals.
///
/// Scale is applied once at construction; downstream code only sees scaled
/// vertices.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    scale: f64,
    face_normals: Vec<Vector3<f64>>,
    // Per triangle, per local edge: sum of the adjacent face normals.
    edge_normals: Vec<[Vector3<f64>; 3]>,
    vertex_normals: Vec<Vector3<f64>>,
}

impl TriangleMesh {
    /// Builds a mesh, multiplying every vertex by `scale`.
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
        scale: f64,
    ) -> Result<Self, MeshError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(MeshError::BadScale(scale));
        }
        let vertices: Vec<_> = vertices.into_iter().map(|v| v * scale).collect();
        let mut issues = Vec::new();
        for (i, v) in vertices.iter().enumerate() {
            if v.iter().any(|c| !c.is_finite()) {
                issues.push(MeshIssue::NonFiniteVertex { vertex: i });
            }
        }
        for (f, tri) in triangles.iter().enumerate() {
            let mut in_range = true;
            for &idx in tri {
                if idx >= vertices.len() {
                    in_range = false;
                    issues.push(MeshIssue::IndexOutOfRange {
                        face: f,
                        index: idx as i64,
                    });
                }
            }
            if in_range {
                let [a, b, c] = tri.map(|i| vertices[i]);
                if (b - a).cross(&(c - a)).norm() <= DEGENERATE_CROSS_NORM {
                    issues.push(MeshIssue::DegenerateTriangle { face: f });
                }
            }
        }
        if !issues.is_empty() {
            return Err(MeshError::Invalid(issues));
        }
        if triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        Ok(Self::with_normals(vertices, triangles, scale))
    }

    fn with_normals(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>, scale: f64) -> Self {
        let face_normals: Vec<_> = triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| vertices[i]);
                (b - a).cross(&(c - a)).normalize()
            })
            .collect();

        let mut edge_sum: HashMap<(usize, usize), Vector3<f64>> = HashMap::new();
        let mut vertex_normals = vec![Vector3::zeros(); vertices.len()];
        for (f, t) in triangles.iter().enumerate() {
            let n = face_normals[f];
            for e in 0..3 {
                let (i, j) = (t[e], t[(e + 1) % 3]);
                *edge_sum.entry((i.min(j), i.max(j))).or_insert_with(Vector3::zeros) += n;

                let prev = vertices[t[(e + 2) % 3]];
                let here = vertices[t[e]];
                let next = vertices[t[(e + 1) % 3]];
                let angle = (next - here).angle(&(prev - here));
                vertex_normals[t[e]] += n * angle;
            }
        }
        let edge_normals = triangles
            .iter()
            .map(|t| {
                std::array::from_fn(|e| {
                    let (i, j) = (t[e], t[(e + 1) % 3]);
                    edge_sum[&(i.min(j), i.max(j))]
                })
            })
            .collect();

        Self {
            vertices,
            triangles,
            scale,
            face_normals,
            edge_normals,
            vertex_normals,
        }
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Scale factor that was applied at load time.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn face_normal(&self, triangle: usize) -> Vector3<f64> {
        self.face_normals[triangle]
    }

    pub fn triangle_vertices(&self, triangle: usize) -> [Vector3<f64>; 3] {
        self.triangles[triangle].map(|i| self.vertices[i])
    }

    /// Rigidly re-expresses the mesh in another frame.
    pub fn transformed(&self, pose: &Pose) -> TriangleMesh {
        let vertices = self
            .vertices
            .iter()
            .map(|v| pose.transform_point(v))
            .collect();
        Self::with_normals(vertices, self.triangles.clone(), self.scale)
    }

    pub fn nearest_surface_point(&self, p: &Vector3<f64>) -> Result<SurfaceContact, MeshError> {
        if self.triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let mut best: Option<(f64, usize, Vector3<f64>, Feature)> = None;
        for (f, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| self.vertices[i]);
            let (q, feature) = closest_point_on_triangle(p, &a, &b, &c);
            let d2 = (p - q).norm_squared();
            // strict comparison keeps the lowest triangle index on ties
            if best.as_ref().is_none_or(|(bd, ..)| d2 < *bd) {
                best = Some((d2, f, q, feature));
            }
        }
        let (d2, f, point, feature) = best.expect("non-empty mesh");
        let pseudo = match feature {
            Feature::Face => self.face_normals[f],
            Feature::Edge(e) => self.edge_normals[f][e],
            Feature::Vertex(v) => self.vertex_normals[self.triangles[f][v]],
        };
        let normal = pseudo
            .try_normalize(1e-300)
            .unwrap_or(self.face_normals[f]);
        let dist = d2.sqrt();
        let sign = if (p - point).dot(&pseudo) < 0.0 { -1.0 } else { 1.0 };
        Ok(SurfaceContact {
            point,
            normal,
            distance: sign * dist,
            triangle: f,
        })
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> Result<f64, MeshError> {
        self.nearest_surface_point(p).map(|c| c.distance)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}

/// Closest point on triangle `abc` to `p` together with the feature it lies on
/// (Voronoi-region walk).
pub(crate) fn closest_point_on_triangle(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> (Vector3<f64>, Feature) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, Feature::Vertex(0));
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, Feature::Vertex(1));
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Feature::Edge(0));
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, Feature::Vertex(2));
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Feature::Edge(2));
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Feature::Edge(1));
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face)
}

//! Wavefront OBJ subset: `v` and triangular `f` records.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::mesh::{MeshError, MeshIssue, TriangleMesh};

/// Parses OBJ text. Records other than `v` and `f` are ignored; faces with more
/// than three vertices are rejected. All problems are reported together.
pub fn parse_obj(text: &str, scale: f64) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut issues = Vec::new();
    let mut face_index = 0usize;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts.take(3).filter_map(|s| s.parse().ok()).collect();
                if coords.len() == 3 {
                    vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
                } else {
                    issues.push(MeshIssue::Parse {
                        line: line_no,
                        message: "vertex needs three numeric coordinates".into(),
                    });
                }
            }
            Some("f") => {
                let refs: Vec<&str> = parts.collect();
                let face = face_index;
                face_index += 1;
                if refs.len() != 3 {
                    issues.push(MeshIssue::NonTriangularFace {
                        face,
                        line: line_no,
                        vertices: refs.len(),
                    });
                    continue;
                }
                let mut tri = [0usize; 3];
                let mut ok = true;
                for (slot, r) in tri.iter_mut().zip(&refs) {
                    let head = r.split('/').next().unwrap_or("");
                    match head.parse::<i64>() {
                        // relative indices count back from the vertices seen so far
                        Ok(i) if i < 0 && (-i) as usize <= vertices.len() => {
                            *slot = (vertices.len() as i64 + i) as usize;
                        }
                        Ok(i) if i > 0 => *slot = (i - 1) as usize,
                        Ok(i) => {
                            ok = false;
                            issues.push(MeshIssue::IndexOutOfRange { face, index: i });
                        }
                        Err(_) => {
                            ok = false;
                            issues.push(MeshIssue::Parse {
                                line: line_no,
                                message: format!("bad vertex reference '{r}'"),
                            });
                        }
                    }
                }
                if ok {
                    triangles.push((face, tri));
                }
            }
            _ => {}
        }
    }

    // range and degeneracy checks report file face numbers
    let mut kept = Vec::with_capacity(triangles.len());
    for (face, tri) in triangles {
        let mut valid = true;
        for &i in &tri {
            if i >= vertices.len() {
                valid = false;
                issues.push(MeshIssue::IndexOutOfRange {
                    face,
                    index: i as i64 + 1,
                });
            }
        }
        if valid {
            let [a, b, c] = tri.map(|i| vertices[i] * scale);
            if (b - a).cross(&(c - a)).norm() <= 1e-14 {
                issues.push(MeshIssue::DegenerateTriangle { face });
            }
        }
        kept.push(tri);
    }
    if !issues.is_empty() {
        return Err(MeshError::Invalid(issues));
    }
    TriangleMesh::new(vertices, kept, scale)
}

pub fn load_obj(path: &Path, scale: f64) -> Result<TriangleMesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| MeshError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_obj(&text, scale)
}

/// Serializes a mesh as OBJ, optionally followed by extra labelled points
/// emitted as `p` records.
pub fn write_obj(mesh: &TriangleMesh, points: &[(String, Vector3<f64>)]) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    let base = mesh.vertices().len();
    for (i, (label, p)) in points.iter().enumerate() {
        let _ = writeln!(out, "# {label}");
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
        let _ = writeln!(out, "p {}", base + i + 1);
    }
    out
}

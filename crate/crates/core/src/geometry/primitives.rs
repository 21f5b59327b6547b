//! Closed, outward-oriented primitive meshes used for fixtures and tests.

use std::collections::HashMap;

use nalgebra::Vector3;

use super::mesh::{MeshError, TriangleMesh};

/// Axis-aligned box centered at the origin.
pub fn cuboid(half_extents: Vector3<f64>) -> Result<TriangleMesh, MeshError> {
    let h = half_extents;
    let vertices: Vec<_> = (0..8)
        .map(|i| {
            Vector3::new(
                if i & 1 == 0 { -h.x } else { h.x },
                if i & 2 == 0 { -h.y } else { h.y },
                if i & 4 == 0 { -h.z } else { h.z },
            )
        })
        .collect();
    // quads listed counter-clockwise seen from outside
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh::new(vertices, triangles, 1.0)
}

/// Subdivided icosahedron projected onto a sphere of `radius`.
pub fn icosphere(radius: f64, subdivisions: u32) -> Result<TriangleMesh, MeshError> {
    ellipsoid(Vector3::repeat(radius), subdivisions)
}

/// Icosphere scaled per axis.
pub fn ellipsoid(radii: Vector3<f64>, subdivisions: u32) -> Result<TriangleMesh, MeshError> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |i: usize, j: usize, vs: &mut Vec<Vector3<f64>>| {
            *midpoints.entry((i.min(j), i.max(j))).or_insert_with(|| {
                vs.push(((vs[i] + vs[j]) * 0.5).normalize());
                vs.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| v.component_mul(&radii)).collect();
    TriangleMesh::new(vertices, faces, 1.0)
}

/// Capped cylinder along z, centered at the origin.
pub fn cylinder(radius: f64, half_height: f64, segments: usize) -> Result<TriangleMesh, MeshError> {
    let n = segments.max(3);
    let mut vertices = Vec::with_capacity(2 * n + 2);
    for z in [-half_height, half_height] {
        for i in 0..n {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            vertices.push(Vector3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let bottom = vertices.len();
    vertices.push(Vector3::new(0.0, 0.0, -half_height));
    let top = vertices.len();
    vertices.push(Vector3::new(0.0, 0.0, half_height));
    let mut triangles = Vec::with_capacity(4 * n);
    for i in 0..n {
        let j = (i + 1) % n;
        triangles.push([i, j, n + j]);
        triangles.push([i, n + j, n + i]);
        triangles.push([bottom, j, i]);
        triangles.push([top, n + i, n + j]);
    }
    TriangleMesh::new(vertices, triangles, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enclosed_volume(mesh: &TriangleMesh) -> f64 {
        (0..mesh.triangles().len())
            .map(|t| {
                let [a, b, c] = mesh.triangle_vertices(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    #[test]
    fn primitives_are_outward_oriented() {
        let cube = cuboid(Vector3::new(0.5, 0.5, 0.5)).unwrap();
        assert!((enclosed_volume(&cube) - 1.0).abs() < 1e-12);
        let s = icosphere(1.0, 3).unwrap();
        let v = enclosed_volume(&s);
        assert!(v > 4.0 && v < 4.0 * std::f64::consts::PI / 3.0 + 1e-9);
        let c = cylinder(0.04, 0.05, 48).unwrap();
        assert!(enclosed_volume(&c) > 0.0);
        assert!(c.signed_distance(&Vector3::zeros()).unwrap() < 0.0);
    }
}

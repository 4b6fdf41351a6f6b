use thiserror::Error;

use super::transform::RigidTransform;
use crate::math::{Aabb, Vec3};

/// Indexed triangle mesh with per-vertex normals and UVs.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub uvs: Vec<[f64; 2]>,
    pub triangles: Vec<[u32; 3]>,
    pub material_slot: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {triangle} references vertex {index} but only {count} exist")]
    IndexOutOfRange { triangle: usize, index: u32, count: usize },
    #[error("attribute count mismatch: {vertices} vertices, {normals} normals, {uvs} uvs")]
    AttributeMismatch { vertices: usize, normals: usize, uvs: usize },
    #[error("normal {0} is not unit length")]
    NonUnitNormal(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
}

impl Mesh {
    pub fn empty(material_slot: impl Into<String>) -> Self {
        Mesh {
            vertices: Vec::new(),
            normals: Vec::new(),
            uvs: Vec::new(),
            triangles: Vec::new(),
            material_slot: material_slot.into(),
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = self.vertices.len();
        if self.normals.len() != n || self.uvs.len() != n {
            return Err(MeshError::AttributeMismatch { vertices: n, normals: self.normals.len(), uvs: self.uvs.len() });
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        if let Some(i) = self.normals.iter().position(|nrm| (nrm.length() - 1.0).abs() > 1e-6) {
            return Err(MeshError::NonUnitNormal(i));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            for &index in tri {
                if index as usize >= n {
                    return Err(MeshError::IndexOutOfRange { triangle: t, index, count: n });
                }
            }
        }
        Ok(())
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// Radius of the smallest origin-centred sphere that holds every vertex.
    pub fn bounding_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.length()).fold(0.0, f64::max)
    }

    pub fn triangle_positions(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn transformed(&self, xf: &RigidTransform) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(|&v| xf.apply_point(v)).collect(),
            normals: self.normals.iter().map(|&n| xf.apply_vector(n).normalized()).collect(),
            uvs: self.uvs.clone(),
            triangles: self.triangles.clone(),
            material_slot: self.material_slot.clone(),
        }
    }

    /// Translates the mesh so its AABB centre sits at the origin.
    pub fn centered(&self) -> Mesh {
        let c = self.aabb().center();
        self.transformed(&RigidTransform::translation(-c))
    }

    /// Appends another mesh's geometry, offsetting its indices.
    pub fn append(&mut self, other: &Mesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.normals.extend_from_slice(&other.normals);
        self.uvs.extend_from_slice(&other.uvs);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }

    /// Area-weighted vertex normals from face geometry. Vertices with no
    /// usable adjacent face get +Y.
    pub fn face_weighted_normals(vertices: &[Vec3], triangles: &[[u32; 3]]) -> Vec<Vec3> {
        let mut acc = vec![Vec3::ZERO; vertices.len()];
        for tri in triangles {
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            let n = (b - a).cross(c - a);
            for &i in tri {
                acc[i as usize] += n;
            }
        }
        acc.into_iter().map(|n| n.try_normalized().unwrap_or(Vec3::Y)).collect()
    }

    /// UV sphere centred at the origin.
    pub fn uv_sphere(radius: f64, segments: u32, rings: u32) -> Mesh {
        let segments = segments.max(3);
        let rings = rings.max(2);
        let mut m = Mesh::empty("sphere");
        for r in 0..=rings {
            let v = r as f64 / rings as f64;
            let theta = v * std::f64::consts::PI;
            for s in 0..=segments {
                let u = s as f64 / segments as f64;
                let phi = u * std::f64::consts::TAU;
                let n = Vec3::new(theta.sin() * phi.cos(), theta.cos(), -theta.sin() * phi.sin());
                m.vertices.push(n * radius);
                m.normals.push(n.normalized());
                m.uvs.push([u, v]);
            }
        }
        let row = segments + 1;
        for r in 0..rings {
            for s in 0..segments {
                let a = r * row + s;
                let b = a + row;
                if r != 0 {
                    m.triangles.push([a, b, a + 1]);
                }
                if r != rings - 1 {
                    m.triangles.push([a + 1, b, b + 1]);
                }
            }
        }
        m.compact();
        m
    }

    /// Drops vertices no triangle references, preserving order.
    pub fn compact(&mut self) {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &i in t {
                used[i as usize] = true;
            }
        }
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut next = 0u32;
        for (i, &u) in used.iter().enumerate() {
            if u {
                remap[i] = next;
                next += 1;
            }
        }
        fn keep<T: Copy>(v: &[T], used: &[bool]) -> Vec<T> {
            v.iter().zip(used).filter(|(_, &u)| u).map(|(x, _)| *x).collect()
        }
        self.vertices = keep(&self.vertices, &used);
        self.normals = keep(&self.normals, &used);
        self.uvs = keep(&self.uvs, &used);
        for t in &mut self.triangles {
            *t = t.map(|i| remap[i as usize]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_is_valid_and_outward() {
        let s = Mesh::uv_sphere(2.0, 24, 12);
        s.validate().unwrap();
        for t in 0..s.triangle_count() {
            let [a, b, c] = s.triangle_positions(t);
            let n = (b - a).cross(c - a);
            let centroid = (a + b + c) / 3.0;
            assert!(n.dot(centroid) > 0.0, "triangle {t} faces inward");
        }
        let bb = s.aabb();
        assert!((bb.max.y - 2.0).abs() < 1e-12 && (bb.min.y + 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_indices() {
        let mut m = Mesh::uv_sphere(1.0, 4, 3);
        m.triangles.push([0, 1, 9999]);
        assert!(matches!(m.validate(), Err(MeshError::IndexOutOfRange { index: 9999, .. })));
        assert_eq!(Mesh::empty("x").validate(), Err(MeshError::Empty));
    }
}

//! Bounding volume hierarchy over world-space triangles.

use thiserror::Error;

use crate::math::{Aabb, Vec3};
use crate::scene::Mesh;

const BINS: usize = 12;
const MAX_DEPTH: usize = 64;
const LEAF_TARGET: usize = 4;
const TRAVERSAL_COST: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum BvhError {
    #[error("scene has no triangles")]
    EmptyScene,
}

/// Triangle with the data needed for intersection and shading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub p0: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    /// Unit geometric normal from the winding order (+Y when degenerate).
    pub normal: Vec3,
    pub uv: [[f64; 2]; 3],
    /// Index of the mesh this triangle came from.
    pub mesh: u32,
}

impl Triangle {
    fn new(p: [Vec3; 3], uv: [[f64; 2]; 3], mesh: u32) -> Triangle {
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let normal = e1.cross(e2).try_normalized().unwrap_or(Vec3::Y);
        Triangle { p0: p[0], e1, e2, normal, uv, mesh }
    }

    pub fn vertices(&self) -> [Vec3; 3] {
        [self.p0, self.p0 + self.e1, self.p0 + self.e2]
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices())
    }

    fn centroid(&self) -> Vec3 {
        self.p0 + (self.e1 + self.e2) / 3.0
    }

    /// Möller–Trumbore; returns `(t, u, v)` for hits with `t` in `(t_min, t_max)`.
    #[inline]
    pub fn intersect(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Option<(f64, f64, f64)> {
        let pv = dir.cross(self.e2);
        let det = self.e1.dot(pv);
        if det.abs() < 1e-14 {
            return None;
        }
        let inv = 1.0 / det;
        let tv = origin - self.p0;
        let u = tv.dot(pv) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let qv = tv.cross(self.e1);
        let v = dir.dot(qv) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = self.e2.dot(qv) * inv;
        (t > t_min && t < t_max).then_some((t, u, v))
    }

    pub fn uv_at(&self, u: f64, v: f64) -> [f64; 2] {
        let w = 1.0 - u - v;
        [
            w * self.uv[0][0] + u * self.uv[1][0] + v * self.uv[2][0],
            w * self.uv[0][1] + u * self.uv[1][1] + v * self.uv[2][1],
        ]
    }
}

/// Flattened node. Interior nodes keep their left child at `index + 1` and
/// the right child at `offset`; leaves hold `count` triangle references
/// starting at `offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    pub offset: u32,
    pub count: u32,
    pub axis: u8,
}

impl BvhNode {
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle: u32,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    refs: Vec<u32>,
    triangles: Vec<Triangle>,
}

struct Builder {
    bounds: Vec<Aabb>,
    centroids: Vec<Vec3>,
    nodes: Vec<BvhNode>,
}

impl Builder {
    fn build(&mut self, refs: &mut [u32], offset: usize, depth: usize) -> usize {
        let index = self.nodes.len();
        let bounds = refs.iter().fold(Aabb::EMPTY, |b, &r| b.union(self.bounds[r as usize]));
        self.nodes.push(BvhNode { bounds, offset: offset as u32, count: refs.len() as u32, axis: 0 });
        let n = refs.len();
        if n <= 2 || depth + 1 >= MAX_DEPTH {
            return index;
        }
        let cb = refs.iter().fold(Aabb::EMPTY, |b, &r| b.grow(self.centroids[r as usize]));
        let ext = cb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z { 0 } else if ext.y >= ext.z { 1 } else { 2 };

        let mid = if ext[axis] > 0.0 {
            self.sah_split(refs, &cb, axis, &bounds)
        } else {
            None
        };
        let mid = match mid {
            Some(m) => m,
            None if n <= LEAF_TARGET => return index,
            None => {
                // Median split on the centroid axis; also covers coincident centroids.
                refs.sort_by(|&a, &b| {
                    self.centroids[a as usize][axis]
                        .total_cmp(&self.centroids[b as usize][axis])
                        .then(a.cmp(&b))
                });
                n / 2
            }
        };
        let (left, right) = refs.split_at_mut(mid);
        self.build(left, offset, depth + 1);
        let r = self.build(right, offset + mid, depth + 1);
        let node = &mut self.nodes[index];
        node.offset = r as u32;
        node.count = 0;
        node.axis = axis as u8;
        index
    }

    /// Binned SAH. Returns the partition point, or `None` when a leaf is
    /// cheaper (small nodes) or the bins cannot separate the references.
    fn sah_split(&self, refs: &mut [u32], cb: &Aabb, axis: usize, bounds: &Aabb) -> Option<usize> {
        let lo = cb.min[axis];
        let scale = BINS as f64 / (cb.max[axis] - lo);
        let bin_of = |c: Vec3| (((c[axis] - lo) * scale) as usize).min(BINS - 1);
        let mut counts = [0usize; BINS];
        let mut boxes = [Aabb::EMPTY; BINS];
        for &r in refs.iter() {
            let b = bin_of(self.centroids[r as usize]);
            counts[b] += 1;
            boxes[b] = boxes[b].union(self.bounds[r as usize]);
        }
        let mut right_area = [0.0; BINS];
        let mut right_count = [0usize; BINS];
        let (mut acc_box, mut acc_n) = (Aabb::EMPTY, 0);
        for i in (1..BINS).rev() {
            acc_box = acc_box.union(boxes[i]);
            acc_n += counts[i];
            right_area[i] = acc_box.surface_area();
            right_count[i] = acc_n;
        }
        let (mut best_cost, mut best_bin) = (f64::INFINITY, 0);
        let (mut acc_box, mut acc_n) = (Aabb::EMPTY, 0);
        for i in 1..BINS {
            acc_box = acc_box.union(boxes[i - 1]);
            acc_n += counts[i - 1];
            if acc_n == 0 || right_count[i] == 0 {
                continue;
            }
            let cost = acc_box.surface_area() * acc_n as f64 + right_area[i] * right_count[i] as f64;
            if cost < best_cost {
                best_cost = cost;
                best_bin = i;
            }
        }
        if best_bin == 0 {
            return None;
        }
        let area = bounds.surface_area().max(1e-300);
        let split_cost = TRAVERSAL_COST + best_cost / area;
        if refs.len() <= LEAF_TARGET && split_cost >= refs.len() as f64 {
            return None;
        }
        let mut i = 0;
        for j in 0..refs.len() {
            if bin_of(self.centroids[refs[j] as usize]) < best_bin {
                refs.swap(i, j);
                i += 1;
            }
        }
        (i > 0 && i < refs.len()).then_some(i)
    }
}

/// Builds a BVH over every triangle of `meshes` (already in world space).
pub fn build_bvh(meshes: &[Mesh]) -> Result<Bvh, BvhError> {
    let mut triangles = Vec::new();
    for (mi, m) in meshes.iter().enumerate() {
        for (t, tri) in m.triangles.iter().enumerate() {
            let uv = tri.map(|i| m.uvs.get(i as usize).copied().unwrap_or([0.0, 0.0]));
            triangles.push(Triangle::new(m.triangle_positions(t), uv, mi as u32));
        }
    }
    Bvh::from_triangles(triangles)
}

impl Bvh {
    pub fn from_triangles(triangles: Vec<Triangle>) -> Result<Bvh, BvhError> {
        if triangles.is_empty() {
            return Err(BvhError::EmptyScene);
        }
        let mut builder = Builder {
            bounds: triangles.iter().map(Triangle::bounds).collect(),
            centroids: triangles.iter().map(Triangle::centroid).collect(),
            nodes: Vec::with_capacity(2 * triangles.len()),
        };
        let mut refs: Vec<u32> = (0..triangles.len() as u32).collect();
        builder.build(&mut refs, 0, 0);
        let nodes = builder.nodes;
        Ok(Bvh { nodes, refs, triangles })
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Triangle indices in leaf order; each appears exactly once.
    pub fn references(&self) -> &[u32] {
        &self.refs
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[BvhNode], i: usize) -> usize {
            let n = &nodes[i];
            if n.is_leaf() {
                1
            } else {
                1 + walk(nodes, i + 1).max(walk(nodes, n.offset as usize))
            }
        }
        walk(&self.nodes, 0)
    }

    /// Nearest hit with `t` in `(t_min, t_max)`.
    pub fn intersect(&self, origin: Vec3, dir: Vec3, t_min: f64, mut t_max: f64) -> Option<Hit> {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let neg = [dir.x < 0.0, dir.y < 0.0, dir.z < 0.0];
        let mut stack = [0u32; MAX_DEPTH * 2];
        let mut sp = 0;
        let mut node = 0usize;
        let mut best: Option<Hit> = None;
        loop {
            let n = &self.nodes[node];
            if n.bounds.hit(origin, inv, t_min, t_max).is_some() {
                if n.is_leaf() {
                    for &r in &self.refs[n.offset as usize..(n.offset + n.count) as usize] {
                        if let Some((t, u, v)) = self.triangles[r as usize].intersect(origin, dir, t_min, t_max) {
                            t_max = t;
                            best = Some(Hit { t, triangle: r, u, v });
                        }
                    }
                } else {
                    let (near, far) = if neg[n.axis as usize] {
                        (n.offset as usize, node + 1)
                    } else {
                        (node + 1, n.offset as usize)
                    };
                    stack[sp] = far as u32;
                    sp += 1;
                    node = near;
                    continue;
                }
            }
            if sp == 0 {
                return best;
            }
            sp -= 1;
            node = stack[sp] as usize;
        }
    }

    /// Whether anything blocks the ray within `(t_min, t_max)`.
    pub fn occluded(&self, origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> bool {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = [0u32; MAX_DEPTH * 2];
        let mut sp = 0;
        let mut node = 0usize;
        loop {
            let n = &self.nodes[node];
            if n.bounds.hit(origin, inv, t_min, t_max).is_some() {
                if n.is_leaf() {
                    for &r in &self.refs[n.offset as usize..(n.offset + n.count) as usize] {
                        if self.triangles[r as usize].intersect(origin, dir, t_min, t_max).is_some() {
                            return true;
                        }
                    }
                } else {
                    stack[sp] = n.offset;
                    sp += 1;
                    node += 1;
                    continue;
                }
            }
            if sp == 0 {
                return false;
            }
            sp -= 1;
            node = stack[sp] as usize;
        }
    }
}

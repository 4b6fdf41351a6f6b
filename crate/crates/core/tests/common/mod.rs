//! Independent reference implementations shared by the integration and
//! acceptance tests.

#![allow(dead_code)]

use std::f64::consts::TAU;
use std::sync::Arc;

use airforge::environment::{lookup, uv_to_dir, EnvMap, EnvSampler};
use airforge::evalkit::{DetectionRecord, GroundTruth};
use airforge::labeler::{annotate_meshes, Annotation};
use airforge::materials::{eval_bsdf, sample_pattern, BsdfKind, MaterialSpec, PatternKind};
use airforge::math::{Mat3, Vec3};
use airforge::renderer::{render, RenderConfig, Scene, SceneObject};
use airforge::rng::Stream;
use airforge::sampler::camera_pose;
use airforge::scene::{generate_uav_mesh, look_at, BBox2D, Camera, Mesh, RigidTransform, UavParams};

// ---------------------------------------------------------------- renderer

/// Smooth sky: vertical gradient plus a broad warm lobe and a dim ground.
pub fn smooth_env(width: usize) -> EnvMap {
    let height = width / 2;
    let lobe = Vec3::new(0.5, 0.7, 0.3).normalized();
    let mut radiance = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let d = uv_to_dir((col as f64 + 0.5) / width as f64, (row as f64 + 0.5) / height as f64);
            let sky = if d.y >= 0.0 {
                Vec3::new(0.35, 0.5, 0.9) * (0.6 + 0.4 * d.y)
            } else {
                Vec3::new(0.12, 0.1, 0.08)
            };
            let glow = Vec3::new(3.0, 2.4, 1.6) * d.dot(lobe).max(0.0).powi(8);
            radiance.push(sky + glow);
        }
    }
    EnvMap::new(width, height, radiance, "smooth").unwrap()
}

pub fn glossy(id: u32, color: [f64; 3], roughness: f64) -> MaterialSpec {
    MaterialSpec { bsdf: BsdfKind::Glossy, roughness: Some(roughness), ..MaterialSpec::diffuse(id, color) }
}

pub fn checker(id: u32, a: [f64; 3], b: [f64; 3], scale: f64) -> MaterialSpec {
    MaterialSpec { pattern: PatternKind::Checker, color_a: a, color_b: b, scale, ..MaterialSpec::diffuse(id, a) }
}

/// Axis-aligned square in the `y = height` plane, facing +Y.
pub fn ground_quad(half: f64, height: f64) -> Mesh {
    let mut m = Mesh::empty("ground");
    m.vertices = vec![
        Vec3::new(-half, height, -half),
        Vec3::new(-half, height, half),
        Vec3::new(half, height, half),
        Vec3::new(half, height, -half),
    ];
    m.normals = vec![Vec3::Y; 4];
    m.uvs = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
    m.triangles = vec![[0, 1, 2], [0, 2, 3]];
    m
}

/// Sphere on a glossy ground under [`smooth_env`], seen by a `size²` camera.
pub fn oracle_scene(size: u32) -> (Camera, Arc<EnvMap>, Vec<SceneObject>) {
    let camera = Camera::new(look_at(Vec3::new(0.0, 1.2, 3.2), Vec3::new(0.0, 0.4, 0.0), Vec3::Y).unwrap(), 40.0, size, size)
        .unwrap();
    let sphere = Mesh::uv_sphere(0.6, 16, 8).transformed(&RigidTransform::translation(Vec3::new(0.0, 0.6, 0.0)));
    let objects = vec![
        SceneObject { mesh: sphere, material: checker(0, [0.9, 0.2, 0.2], [0.9, 0.9, 0.9], 4.0), instance_id: 0 },
        SceneObject { mesh: ground_quad(3.0, 0.0), material: glossy(1, [0.6, 0.5, 0.4], 0.5), instance_id: 1 },
    ];
    (camera, Arc::new(smooth_env(64)), objects)
}

pub fn library_scene(camera: Camera, env: &Arc<EnvMap>, objects: Vec<SceneObject>) -> Scene {
    Scene::new(camera, Arc::new(EnvSampler::new(env.clone()).unwrap()), objects).unwrap()
}

struct OracleTri {
    p: [Vec3; 3],
    uv: [[f64; 2]; 3],
    object: usize,
}

/// Brute-force path tracer: linear triangle scan, uniform hemisphere
/// sampling, no light sampling, no MIS and no Russian roulette.
pub struct OracleTracer {
    tris: Vec<OracleTri>,
    materials: Vec<MaterialSpec>,
    env: Arc<EnvMap>,
}

impl OracleTracer {
    pub fn new(objects: &[SceneObject], env: Arc<EnvMap>) -> OracleTracer {
        let mut tris = Vec::new();
        for (i, o) in objects.iter().enumerate() {
            assert!(matches!(o.material.bsdf, BsdfKind::Diffuse | BsdfKind::Glossy));
            for t in &o.mesh.triangles {
                let idx = t.map(|k| k as usize);
                let uv = if o.mesh.uvs.is_empty() { [[0.0; 2]; 3] } else { idx.map(|k| o.mesh.uvs[k]) };
                tris.push(OracleTri { p: idx.map(|k| o.mesh.vertices[k]), uv, object: i });
            }
        }
        OracleTracer { tris, materials: objects.iter().map(|o| o.material.clone()).collect(), env }
    }

    fn hit(&self, o: Vec3, d: Vec3) -> Option<(f64, usize, f64, f64)> {
        let mut best: Option<(f64, usize, f64, f64)> = None;
        for (i, t) in self.tris.iter().enumerate() {
            // Cramer's rule on o + t·d = p0 + b1·e1 + b2·e2.
            let e1 = t.p[1] - t.p[0];
            let e2 = t.p[2] - t.p[0];
            let det = -d.dot(e1.cross(e2));
            if det.abs() < 1e-14 {
                continue;
            }
            let r = o - t.p[0];
            let dist = r.dot(e1.cross(e2)) / det;
            let b1 = -d.dot(r.cross(e2)) / det;
            let b2 = -d.dot(e1.cross(r)) / det;
            if dist > 1e-9 && b1 >= 0.0 && b2 >= 0.0 && b1 + b2 <= 1.0 && best.is_none_or(|b| dist < b.0) {
                best = Some((dist, i, b1, b2));
            }
        }
        best
    }

    /// Radiance along `(o, d)` with at most `max_depth` scattering events.
    pub fn radiance(&self, mut o: Vec3, mut d: Vec3, max_depth: u32, rng: &mut Stream) -> Vec3 {
        let mut beta = Vec3::ONE;
        let mut depth = 1;
        loop {
            let Some((t, i, b1, b2)) = self.hit(o, d) else {
                return beta.mul_elem(lookup(&self.env, d));
            };
            if depth > max_depth {
                return Vec3::ZERO;
            }
            let tri = &self.tris[i];
            let p = o + d * t;
            let mut n = (tri.p[1] - tri.p[0]).cross(tri.p[2] - tri.p[0]).normalized();
            let wo = -d;
            if wo.dot(n) < 0.0 {
                n = -n;
            }
            let w0 = 1.0 - b1 - b2;
            let uv = [
                w0 * tri.uv[0][0] + b1 * tri.uv[1][0] + b2 * tri.uv[2][0],
                w0 * tri.uv[0][1] + b1 * tri.uv[1][1] + b2 * tri.uv[2][1],
            ];
            let spec = &self.materials[tri.object];
            let albedo = sample_pattern(spec, uv);
            // Uniform hemisphere: pdf = 1 / 2π.
            let z = rng.next_f64();
            let phi = TAU * rng.next_f64();
            let s = (1.0 - z * z).max(0.0).sqrt();
            let (tx, ty) = n.orthonormal_basis();
            let wi = (tx * (s * phi.cos()) + ty * (s * phi.sin()) + n * z).normalized();
            let f = eval_bsdf(spec, albedo, wi, wo, n).unwrap();
            beta = beta.mul_elem(f) * (wi.dot(n) * TAU);
            if beta.max_component() == 0.0 {
                return Vec3::ZERO;
            }
            o = p + n * 1e-7;
            d = wi;
            depth += 1;
        }
    }

    /// Mean and per-sample variance of pixel luminance from `n` uniformly
    /// jittered paths.
    pub fn pixel_stats(&self, camera: &Camera, px: u32, py: u32, max_depth: u32, n: u32, seed: u64) -> (Vec3, f64) {
        let mut rng = Stream::from_parts(&[0x0AC1E, seed, px as u64, py as u64]);
        let (mut sum, mut lsum, mut lsq) = (Vec3::ZERO, 0.0, 0.0);
        for _ in 0..n {
            let ray = camera.ray_through(px as f64 + rng.next_f64(), py as f64 + rng.next_f64());
            let c = self.radiance(ray.origin, ray.dir, max_depth, &mut rng);
            sum += c;
            lsum += c.luminance();
            lsq += c.luminance() * c.luminance();
        }
        let mean = lsum / n as f64;
        (sum / n as f64, (lsq / n as f64 - mean * mean).max(0.0))
    }
}

// ---------------------------------------------------------------- metrics

fn oracle_iou(a: &BBox2D, b: &BBox2D) -> f64 {
    let w = a.x_max.min(b.x_max) - a.x_min.max(b.x_min);
    let h = a.y_max.min(b.y_max) - a.y_min.max(b.y_min);
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let i = w * h;
    i / ((a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - i)
}

/// AP by sweeping every confidence threshold: each threshold re-matches the
/// detections at or above it from scratch, and the area sums interpolated
/// precision over the recall steps. Assumes distinct confidences.
pub fn brute_force_ap(dets: &[DetectionRecord], gts: &[GroundTruth], iou_threshold: f64) -> f64 {
    let mut thresholds: Vec<f64> = dets.iter().map(|d| d.confidence).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    let mut points = Vec::new();
    for &tau in &thresholds {
        let mut kept: Vec<&DetectionRecord> = dets.iter().filter(|d| d.confidence >= tau).collect();
        kept.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        let mut used = vec![false; gts.len()];
        let mut tp = 0usize;
        for d in &kept {
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gts.iter().enumerate() {
                if used[j] || g.image_id != d.image_id || g.class_id != d.class_id {
                    continue;
                }
                let v = oracle_iou(&d.bbox, &g.bbox);
                if best.is_none_or(|b| v > b.1) {
                    best = Some((j, v));
                }
            }
            if let Some((j, v)) = best {
                if v >= iou_threshold {
                    used[j] = true;
                    tp += 1;
                }
            }
        }
        points.push((tp as f64 / gts.len() as f64, tp as f64 / kept.len() as f64));
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (i, &(r, _)) in points.iter().enumerate() {
        if r > prev_recall {
            let best_p = points[i..].iter().map(|p| p.1).fold(0.0, f64::max);
            ap += (r - prev_recall) * best_p;
            prev_recall = r;
        }
    }
    ap
}

/// Random instance: up to `max_boxes` GT boxes over a few images and noisy
/// detections with distinct confidences.
pub fn random_instance(seed: u64, max_boxes: usize) -> (Vec<DetectionRecord>, Vec<GroundTruth>) {
    let mut rng = Stream::from_parts(&[0xAB, seed]);
    let n_gt = 1 + rng.below(max_boxes as u64) as usize;
    let n_img = 1 + rng.below(3);
    let mut gts = Vec::new();
    for _ in 0..n_gt {
        let (x, y) = (rng.uniform(0.0, 80.0), rng.uniform(0.0, 80.0));
        let (w, h) = (rng.uniform(5.0, 20.0), rng.uniform(5.0, 20.0));
        gts.push(GroundTruth {
            image_id: rng.below(n_img),
            class_id: rng.below(2) as u32,
            bbox: BBox2D { x_min: x, y_min: y, x_max: x + w, y_max: y + h },
        });
    }
    let n_det = rng.below(max_boxes as u64 + 1) as usize;
    let mut dets = Vec::new();
    for _ in 0..n_det {
        let bbox = if rng.next_f64() < 0.6 {
            let g = &gts[rng.below(gts.len() as u64) as usize].bbox;
            let j = |rng: &mut Stream| rng.uniform(-3.0, 3.0);
            BBox2D { x_min: g.x_min + j(&mut rng), y_min: g.y_min + j(&mut rng), x_max: g.x_max + j(&mut rng), y_max: g.y_max + j(&mut rng) }
        } else {
            let (x, y) = (rng.uniform(0.0, 80.0), rng.uniform(0.0, 80.0));
            BBox2D { x_min: x, y_min: y, x_max: x + rng.uniform(5.0, 20.0), y_max: y + rng.uniform(5.0, 20.0) }
        };
        dets.push(DetectionRecord { image_id: rng.below(n_img), class_id: rng.below(2) as u32, bbox, confidence: rng.next_f64() });
    }
    (dets, gts)
}

// ---------------------------------------------------------------- statistics

/// Pearson chi-square statistic of `values` in `bins` equal bins over `[lo, hi)`.
pub fn chi_square(values: &[f64], lo: f64, hi: f64, bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / (hi - lo)) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let expected = values.len() as f64 / bins as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// Upper 1% critical value of chi-square with `df` degrees of freedom
/// (Wilson–Hilferty approximation).
pub fn chi_square_critical_99(df: usize) -> f64 {
    let k = df as f64;
    let z = 2.326_347_874_040_841;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

// ---------------------------------------------------------------- oracle drivers

/// Per-pixel z-scores of the library renderer against the brute-force
/// tracer on luminance, over the central 8×8 block of a 16×16 image.
pub fn oracle_z_scores(seeds: u64, oracle_paths: u32, library_depth: u32) -> Vec<f64> {
    let size = 16;
    let (camera, env, objects) = oracle_scene(size);
    let oracle = OracleTracer::new(&objects, env.clone());
    let scene = library_scene(camera, &env, objects);
    let n = (size * size) as usize;
    let (mut sum, mut sq) = (vec![0.0; n], vec![0.0; n]);
    for seed in 0..seeds {
        let cfg = RenderConfig { spp: 4, max_depth: library_depth, width: size, height: size, seed, ..RenderConfig::default() };
        let out = render(&scene, &cfg).unwrap();
        for (i, c) in out.color.iter().enumerate() {
            sum[i] += c.luminance();
            sq[i] += c.luminance() * c.luminance();
        }
    }
    let s = seeds as f64;
    (0..n)
        .filter(|i| (4..12).contains(&(i % 16)) && (4..12).contains(&(i / 16)))
        .map(|i| {
            let mean = sum[i] / s;
            let var = (sq[i] / s - mean * mean).max(0.0) * s / (s - 1.0);
            let (px, py) = ((i as u32) % size, (i as u32) / size);
            let (o, ovar) = oracle.pixel_stats(&scene.camera, px, py, 2, oracle_paths, 7);
            let sigma = (var / s + ovar / oracle_paths as f64).sqrt();
            (mean - o.luminance()) / sigma.max(1e-12)
        })
        .collect()
}

/// Annotation box and instance-buffer silhouette box (pixel extents) of one
/// random single-UAV scene, or `None` when either is empty. The silhouette is
/// traced at `ss`× resolution so sub-pixel rotor edges still register.
pub fn label_and_silhouette(seed: u64, size: u32, ss: u32) -> Option<(Annotation, BBox2D)> {
    let mut rng = Stream::from_parts(&[0x1AB, seed]);
    let mesh = generate_uav_mesh(&UavParams::default(), seed).unwrap().centered();
    let xf = RigidTransform {
        rotation: Mat3::rotation_y(rng.uniform(0.0, 6.3)),
        translation: Vec3::new(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)),
    };
    let world = mesh.transformed(&xf);
    let pose = camera_pose(rng.uniform(-45.0, 45.0), rng.uniform(-45.0, 45.0), rng.uniform(0.0, 360.0), rng.uniform(1.5, 4.0));
    let labels = annotate_meshes(0, &Camera::new(pose, 60.0, size, size).unwrap(), std::slice::from_ref(&world));
    let fine = size * ss;
    let camera = Camera::new(pose, 60.0, fine, fine).unwrap();
    let env = Arc::new(EnvMap::uniform(32, Vec3::ONE, "w").unwrap());
    let scene = library_scene(
        camera,
        &env,
        vec![SceneObject { mesh: world, material: MaterialSpec::diffuse(0, [0.5; 3]), instance_id: 0 }],
    );
    let out = render(&scene, &RenderConfig { spp: 1, max_depth: 1, width: fine, height: fine, ..RenderConfig::default() })
        .unwrap();
    let mut sil: Option<BBox2D> = None;
    for (i, &id) in out.instance_ids.iter().enumerate() {
        if id == 0 {
            let k = ss as f64;
            let (x, y) = ((i as u32 % fine) as f64 / k, (i as u32 / fine) as f64 / k);
            let px = BBox2D { x_min: x, y_min: y, x_max: x + 1.0 / k, y_max: y + 1.0 / k };
            sil = Some(match sil {
                None => px,
                Some(b) => BBox2D {
                    x_min: b.x_min.min(px.x_min),
                    y_min: b.y_min.min(px.y_min),
                    x_max: b.x_max.max(px.x_max),
                    y_max: b.y_max.max(px.y_max),
                },
            });
        }
    }
    Some((*labels.annotations.first()?, sil?))
}

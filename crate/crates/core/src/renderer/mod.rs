//! Path tracer: BVH traversal, BSDF sampling with environment next-event
//! estimation, deterministic parallel rendering and tone mapping.

mod bvh;
mod tonemap;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bvh::{build_bvh, Bvh, BvhError, BvhNode, Hit, Triangle};
pub use tonemap::{srgb_decode, srgb_encode, to_byte, tonemap};

use crate::environment::{lookup, EnvSampler};
use crate::materials::{eval_bsdf, pdf_bsdf, sample_bsdf_full, sample_pattern, BsdfKind, MaterialSpec};
use crate::math::Vec3;
use crate::rng::Stream;
use crate::scene::{Camera, Mesh, Ray};

/// Instance id written for pixels whose center ray misses every object.
pub const BACKGROUND: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub spp: u32,
    pub max_depth: u32,
    pub width: u32,
    pub height: u32,
    pub exposure: f64,
    pub seed: u64,
    /// Mixed into every random stream so images of one dataset decorrelate.
    pub image_id: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { spp: 512, max_depth: 5, width: 608, height: 608, exposure: 1.0, seed: 0, image_id: 0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("invalid render config: {0}")]
    Config(String),
    #[error("camera is {camera:?} but config asks for {config:?}")]
    SizeMismatch { camera: (u32, u32), config: (u32, u32) },
    #[error(transparent)]
    Bvh(#[from] BvhError),
}

impl RenderConfig {
    pub fn check(&self) -> Result<(), RenderError> {
        if self.spp == 0 {
            return Err(RenderError::Config("spp must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(RenderError::Config("max_depth must be at least 1".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::Config("image size must be positive".into()));
        }
        if !(self.exposure > 0.0 && self.exposure.is_finite()) {
            return Err(RenderError::Config("exposure must be positive".into()));
        }
        Ok(())
    }
}

/// One placed object: world-space geometry, its material and the id written
/// to the instance buffer.
#[derive(Debug, Clone)]
pub struct SceneObject {
    pub mesh: Mesh,
    pub material: MaterialSpec,
    pub instance_id: u32,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub camera: Camera,
    pub env: Arc<EnvSampler>,
    objects: Vec<(MaterialSpec, u32)>,
    bvh: Option<Bvh>,
}

impl Scene {
    /// Builds the acceleration structure; an object-free scene is valid and
    /// renders the environment only.
    pub fn new(camera: Camera, env: Arc<EnvSampler>, objects: Vec<SceneObject>) -> Result<Scene, RenderError> {
        let has_geometry = objects.iter().any(|o| !o.mesh.triangles.is_empty());
        let bvh = if has_geometry {
            let meshes: Vec<Mesh> = objects.iter().map(|o| o.mesh.clone()).collect();
            Some(build_bvh(&meshes)?)
        } else {
            None
        };
        let objects = objects.into_iter().map(|o| (o.material, o.instance_id)).collect();
        Ok(Scene { camera, env, objects, bvh })
    }

    pub fn bvh(&self) -> Option<&Bvh> {
        self.bvh.as_ref()
    }

    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.bvh.as_ref()?.intersect(ray.origin, ray.dir, 0.0, f64::INFINITY)
    }

    /// Material, instance id and shading data at a hit.
    pub fn surface(&self, ray: &Ray, hit: &Hit) -> Surface<'_> {
        let bvh = self.bvh.as_ref().expect("hit implies geometry");
        let tri = &bvh.triangles()[hit.triangle as usize];
        let (material, instance_id) = &self.objects[tri.mesh as usize];
        let point = ray.origin + ray.dir * hit.t;
        let uv = tri.uv_at(hit.u, hit.v);
        Surface { material, instance_id: *instance_id, point, normal: tri.normal, uv }
    }

    fn occluded(&self, origin: Vec3, dir: Vec3) -> bool {
        self.bvh.as_ref().is_some_and(|b| b.occluded(origin, dir, 0.0, f64::INFINITY))
    }
}

pub struct Surface<'a> {
    pub material: &'a MaterialSpec,
    pub instance_id: u32,
    pub point: Vec3,
    /// Outward geometric normal.
    pub normal: Vec3,
    pub uv: [f64; 2],
}

/// Offsets `p` off the surface toward the side `dir` leaves through.
pub fn offset_origin(p: Vec3, n: Vec3, dir: Vec3) -> Vec3 {
    let eps = 1e-7 * (1.0 + p.x.abs().max(p.y.abs()).max(p.z.abs()));
    if dir.dot(n) >= 0.0 {
        p + n * eps
    } else {
        p - n * eps
    }
}

/// Primary ray for sample `s`: the first `k²` samples (`k = ⌊√spp⌋`) are
/// jittered inside a `k × k` grid of strata, the rest uniformly.
pub fn primary_ray(camera: &Camera, spp: u32, px: u32, py: u32, s: u32, rng: &mut Stream) -> Ray {
    let k = (spp as f64).sqrt().floor() as u32;
    let (jx, jy) = if s < k * k {
        let (cx, cy) = (s % k, s / k);
        ((cx as f64 + rng.next_f64()) / k as f64, (cy as f64 + rng.next_f64()) / k as f64)
    } else {
        (rng.next_f64(), rng.next_f64())
    };
    camera.ray_through(px as f64 + jx, py as f64 + jy)
}

pub fn sample_stream(config: &RenderConfig, px: u32, py: u32, sample_index: u32) -> Stream {
    let pixel = py as u64 * config.width as u64 + px as u64;
    Stream::from_parts(&[config.seed, config.image_id, pixel, sample_index as u64])
}

/// One path-traced radiance sample for pixel `(px, py)`.
pub fn trace_pixel(scene: &Scene, config: &RenderConfig, px: u32, py: u32, sample_index: u32) -> Vec3 {
    let mut rng = sample_stream(config, px, py, sample_index);
    let ray = primary_ray(&scene.camera, config.spp, px, py, sample_index, &mut rng);
    radiance(scene, config.max_depth, ray, &mut rng)
}

/// Path radiance along `ray` with up to `max_depth` scattering vertices.
/// Diffuse and glossy vertices combine light sampling and BSDF sampling
/// with the balance heuristic; glass and translucent vertices only
/// continue the path.
pub fn radiance(scene: &Scene, max_depth: u32, mut ray: Ray, rng: &mut Stream) -> Vec3 {
    let env = &scene.env;
    let mut l = Vec3::ZERO;
    let mut beta = Vec3::ONE;
    let mut prev_pdf = 0.0;
    let mut prev_delta = true;
    let mut depth = 1;
    loop {
        let Some(hit) = scene.intersect(&ray) else {
            let le = lookup(env.map(), ray.dir);
            if prev_delta {
                l += beta.mul_elem(le);
            } else {
                let lp = env.pdf(ray.dir);
                l += beta.mul_elem(le) * (prev_pdf / (prev_pdf + lp));
            }
            return l;
        };
        if depth > max_depth {
            return l;
        }
        let s = scene.surface(&ray, &hit);
        let spec = s.material;
        let albedo = sample_pattern(spec, s.uv);
        let wo = -ray.dir;
        let opaque = matches!(spec.bsdf, BsdfKind::Diffuse | BsdfKind::Glossy);
        // Opaque lobes shade whichever side the ray arrived from.
        let n = if opaque && wo.dot(s.normal) < 0.0 { -s.normal } else { s.normal };

        if opaque {
            let e = env.sample(rng);
            let cos = e.dir.dot(n);
            if cos > 0.0 && e.pdf > 0.0 {
                let f = eval_bsdf(spec, albedo, e.dir, wo, n).unwrap_or(Vec3::ZERO);
                if f.max_component() > 0.0 && !scene.occluded(offset_origin(s.point, n, e.dir), e.dir) {
                    let bp = pdf_bsdf(spec, e.dir, wo, n);
                    let w = e.pdf / (e.pdf + bp);
                    l += beta.mul_elem(f).mul_elem(e.radiance) * (cos * w / e.pdf);
                }
            }
        }

        let bs = sample_bsdf_full(spec, albedo, wo, n, rng);
        if bs.weight.max_component() <= 0.0 {
            return l;
        }
        beta = beta.mul_elem(bs.weight);
        prev_pdf = bs.pdf;
        prev_delta = bs.delta;
        if depth >= 3 {
            let q = beta.max_component().clamp(0.05, 0.95);
            if rng.next_f64() >= q {
                return l;
            }
            beta = beta / q;
        }
        ray = Ray { origin: offset_origin(s.point, s.normal, bs.wi), dir: bs.wi };
        depth += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub width: u32,
    pub height: u32,
    /// Row-major linear RGB, mean over all samples.
    pub color: Vec<Vec3>,
    /// Row-major instance id of the pixel-center primary hit, or [`BACKGROUND`].
    pub instance_ids: Vec<u32>,
}

/// Renders every pixel on the current rayon pool. Each pixel's samples are
/// accumulated in index order from per-sample streams, so the output does
/// not depend on how rows are scheduled.
pub fn render(scene: &Scene, config: &RenderConfig) -> Result<RenderOutput, RenderError> {
    config.check()?;
    let cam = &scene.camera;
    if (cam.width, cam.height) != (config.width, config.height) {
        return Err(RenderError::SizeMismatch {
            camera: (cam.width, cam.height),
            config: (config.width, config.height),
        });
    }
    let (w, h) = (config.width as usize, config.height as usize);
    let mut color = vec![Vec3::ZERO; w * h];
    let mut instance_ids = vec![BACKGROUND; w * h];
    color
        .par_chunks_mut(w)
        .zip(instance_ids.par_chunks_mut(w))
        .enumerate()
        .for_each(|(py, (row, ids))| {
            let py = py as u32;
            for (px, (c, id)) in row.iter_mut().zip(ids.iter_mut()).enumerate() {
                let px = px as u32;
                let mut sum = Vec3::ZERO;
                for s in 0..config.spp {
                    sum += trace_pixel(scene, config, px, py, s);
                }
                *c = sum / config.spp as f64;
                let center = cam.ray_through(px as f64 + 0.5, py as f64 + 0.5);
                if let Some(hit) = scene.intersect(&center) {
                    *id = scene.surface(&center, &hit).instance_id;
                }
            }
        });
    Ok(RenderOutput { width: config.width, height: config.height, color, instance_ids })
}

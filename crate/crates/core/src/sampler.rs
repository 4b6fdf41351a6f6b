//! Randomization plan: dataset-size arithmetic, yaw schedules and the
//! deterministic enumeration of scene samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Aabb, Mat3, Vec3};
use crate::rng::Stream;
use crate::scene::{look_at, Camera, Projection, RigidTransform};

const PLACEMENT_ATTEMPTS: usize = 100;
const NEAR_CLEARANCE: f64 = 0.05;

/// Closed intervals for every randomized scene parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamRanges {
    /// Camera elevation above the cluster, degrees.
    pub pitch: [f64; 2],
    /// Camera roll about its viewing axis, degrees.
    pub roll: [f64; 2],
    /// Camera orbit angle, degrees.
    pub yaw: [f64; 2],
    /// Camera distance to the cluster centroid, meters.
    pub distance: [f64; 2],
    pub objects_per_image: [u32; 2],
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            pitch: [-45.0, 45.0],
            roll: [-45.0, 45.0],
            yaw: [0.0, 360.0],
            distance: [2.0, 20.0],
            objects_per_image: [1, 3],
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("range `{0}` is empty, reversed or non-finite")]
    BadRange(&'static str),
    #[error("plan needs at least one model, environment and texture")]
    EmptyAxis,
    #[error("target of {target} images is below one image per combination ({combos} combinations)")]
    TargetTooSmall { target: u64, combos: u64 },
    #[error("{expected} model footprints required, {got} given")]
    GeometryMismatch { expected: usize, got: usize },
    #[error("could not place {count} objects for image {image_id} within {attempts} attempts")]
    Placement { image_id: u64, count: u32, attempts: usize },
    #[error("invalid camera: {0}")]
    Camera(String),
}

impl ParamRanges {
    pub fn check(&self) -> Result<(), SamplerError> {
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !ok(self.pitch) || self.pitch[0] < -89.0 || self.pitch[1] > 89.0 {
            return Err(SamplerError::BadRange("pitch"));
        }
        if !ok(self.roll) {
            return Err(SamplerError::BadRange("roll"));
        }
        if !ok(self.yaw) {
            return Err(SamplerError::BadRange("yaw"));
        }
        if !ok(self.distance) || self.distance[0] <= 0.0 {
            return Err(SamplerError::BadRange("distance"));
        }
        let [lo, hi] = self.objects_per_image;
        if lo == 0 || lo > hi {
            return Err(SamplerError::BadRange("objects_per_image"));
        }
        Ok(())
    }
}

/// Full enumeration plan for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPlan {
    pub models: Vec<String>,
    pub environments: Vec<String>,
    pub mixture_size: u32,
    pub poses_per_combo: u32,
    pub yaw_steps: u32,
    pub seed: u64,
    /// Achieved total; always the product of the five factors.
    pub target_images: u64,
    /// Total the caller asked for; differs from `target_images` only when it
    /// had to be rounded up.
    pub requested_images: u64,
    pub ranges: ParamRanges,
}

impl DatasetPlan {
    pub fn combinations(&self) -> u64 {
        self.models.len() as u64 * self.environments.len() as u64 * self.mixture_size as u64
    }

    pub fn images_per_combo(&self) -> u64 {
        self.poses_per_combo as u64 * self.yaw_steps as u64
    }

    pub fn was_rounded(&self) -> bool {
        self.target_images != self.requested_images
    }
}

/// Picks the divisor of `c` nearest to 10 (ties go to the smaller one).
fn yaw_steps_for(c: u64) -> u64 {
    let mut best: u64 = 1;
    let mut d: u64 = 1;
    while d * d <= c {
        if c.is_multiple_of(d) {
            for cand in [d, c / d] {
                let (db, dc) = (best.abs_diff(10), cand.abs_diff(10));
                if dc < db || (dc == db && cand < best) {
                    best = cand;
                }
            }
        }
        d += 1;
    }
    best
}

pub fn make_plan(
    models: &[String],
    environments: &[String],
    mixture_size: u32,
    target_images: u64,
    ranges: &ParamRanges,
    seed: u64,
) -> Result<DatasetPlan, SamplerError> {
    ranges.check()?;
    if models.is_empty() || environments.is_empty() || mixture_size == 0 {
        return Err(SamplerError::EmptyAxis);
    }
    let combos = models.len() as u64 * environments.len() as u64 * mixture_size as u64;
    if target_images < combos {
        return Err(SamplerError::TargetTooSmall { target: target_images, combos });
    }
    let per_combo = target_images.div_ceil(combos);
    let yaw_steps = yaw_steps_for(per_combo);
    let poses = per_combo / yaw_steps;
    let too_big = |_| SamplerError::TargetTooSmall { target: target_images, combos };
    Ok(DatasetPlan {
        models: models.to_vec(),
        environments: environments.to_vec(),
        mixture_size,
        poses_per_combo: u32::try_from(poses).map_err(too_big)?,
        yaw_steps: u32::try_from(yaw_steps).map_err(too_big)?,
        seed,
        target_images: per_combo * combos,
        requested_images: target_images,
        ranges: ranges.clone(),
    })
}

/// `steps` evenly spaced angles `low + i·(high − low)/steps`; `high` itself
/// is never produced.
pub fn yaw_schedule(steps: u32, range: [f64; 2]) -> Vec<f64> {
    let steps = steps.max(1);
    let span = range[1] - range[0];
    (0..steps).map(|i| range[0] + span * i as f64 / steps as f64).collect()
}

/// One fully determined rendering configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSample {
    pub image_id: u64,
    pub model: String,
    pub environment: String,
    pub material: u32,
    /// Index of the (model, environment, material) combination.
    pub combo: u64,
    /// Index of the pose draw within the combination.
    pub pose: u32,
    pub pitch: f64,
    pub roll: f64,
    pub yaw: f64,
    pub distance: f64,
    pub object_count: u32,
    /// World-from-object transforms; the cluster centroid is the origin.
    pub placements: Vec<RigidTransform>,
}

impl SceneSample {
    pub fn camera_pose(&self) -> RigidTransform {
        camera_pose(self.pitch, self.roll, self.yaw, self.distance)
    }

    pub fn camera(&self, geometry: &PlacementGeometry) -> Result<Camera, SamplerError> {
        Camera::new(self.camera_pose(), geometry.horizontal_fov, geometry.width, geometry.height)
            .map_err(|e| SamplerError::Camera(e.to_string()))
    }
}

/// Camera on a sphere of radius `distance` around the origin: `yaw` orbits
/// about +Y (0° sits on +Z), `pitch` raises it above the horizontal plane,
/// and `roll` turns the image about the viewing axis.
pub fn camera_pose(pitch: f64, roll: f64, yaw: f64, distance: f64) -> RigidTransform {
    let (p, y) = (pitch.to_radians(), yaw.to_radians());
    let eye = Vec3::new(p.cos() * y.sin(), p.sin(), p.cos() * y.cos()) * distance;
    let base = look_at(eye, Vec3::ZERO, Vec3::Y).expect("pitch range keeps the view off the poles");
    let roll_m = Mat3::rotation(Vec3::Z, roll.to_radians());
    RigidTransform { rotation: base.rotation.mul_mat(&roll_m), translation: eye }
}

/// Camera intrinsics and per-model extents needed to place objects.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementGeometry {
    pub horizontal_fov: f64,
    pub width: u32,
    pub height: u32,
    /// Object-space AABB of each model (in plan order), centered on its origin.
    pub model_bounds: Vec<Aabb>,
}

impl PlacementGeometry {
    fn radius(&self, model: usize) -> f64 {
        let b = &self.model_bounds[model];
        b.min.length().max(b.max.length())
    }
}

fn rotated_bounds(b: &Aabb, xf: &RigidTransform) -> Aabb {
    let mut out = Aabb::EMPTY;
    for i in 0..8 {
        let c = Vec3::new(
            if i & 1 == 0 { b.min.x } else { b.max.x },
            if i & 2 == 0 { b.min.y } else { b.max.y },
            if i & 4 == 0 { b.min.z } else { b.max.z },
        );
        out = out.grow(xf.apply_point(c));
    }
    out
}

fn strictly_overlap(a: &Aabb, b: &Aabb) -> bool {
    a.min.x < b.max.x && b.min.x < a.max.x && a.min.y < b.max.y && b.min.y < a.max.y && a.min.z < b.max.z && b.min.z < a.max.z
}

/// Whether every object center lands in frame with a margin of half its
/// projected radius, for each camera in `cameras`.
fn in_frustum(cameras: &[Camera], centers: &[Vec3], radius: f64) -> bool {
    cameras.iter().all(|cam| {
        let f = cam.focal_px();
        centers.iter().all(|&c| {
            let pc = cam.to_camera(c);
            if -pc.z - radius <= NEAR_CLEARANCE {
                return false;
            }
            match cam.project_camera_space(pc) {
                Projection::Visible { pixel: (x, y), depth } => {
                    let m = 0.5 * f * radius / depth;
                    x >= m && x <= cam.width as f64 - m && y >= m && y <= cam.height as f64 - m
                }
                Projection::BehindCamera => false,
            }
        })
    })
}

struct PoseDraw {
    pitch: f64,
    roll: f64,
    distance: f64,
    count: u32,
    placements: Vec<RigidTransform>,
}

fn draw_pose(
    plan: &DatasetPlan,
    geometry: &PlacementGeometry,
    yaws: &[f64],
    model: usize,
    combo: u64,
    pose: u32,
    first_image: u64,
) -> Result<PoseDraw, SamplerError> {
    let r = &plan.ranges;
    let mut rng = Stream::from_parts(&[0x5A3F_0001, plan.seed, combo, pose as u64]);
    let pitch = rng.uniform(r.pitch[0], r.pitch[1]);
    let roll = rng.uniform(r.roll[0], r.roll[1]);
    let distance = rng.uniform(r.distance[0], r.distance[1]);
    let count = rng.range_inclusive(r.objects_per_image[0] as i64, r.objects_per_image[1] as i64) as u32;

    let cameras = yaws
        .iter()
        .map(|&yaw| {
            Camera::new(camera_pose(pitch, roll, yaw, distance), geometry.horizontal_fov, geometry.width, geometry.height)
                .map_err(|e| SamplerError::Camera(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let radius = geometry.radius(model);
    let bounds = &geometry.model_bounds[model];
    // Offsets stay within a fraction of the narrower half-field at the
    // orbit distance so the cluster can stay framed from every yaw.
    let half_fov = (0.5 * geometry.horizontal_fov.to_radians()).tan()
        * (geometry.height.min(geometry.width) as f64 / geometry.width as f64);
    let spread = (radius * count as f64).min(0.45 * distance * half_fov);

    for _ in 0..PLACEMENT_ATTEMPTS {
        let mut placements: Vec<RigidTransform> = (0..count)
            .map(|_| {
                let heading = rng.uniform(0.0, std::f64::consts::TAU);
                let offset = if count == 1 {
                    Vec3::ZERO
                } else {
                    Vec3::new(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread))
                };
                RigidTransform { rotation: Mat3::rotation_y(heading), translation: offset }
            })
            .collect();
        let centroid = placements.iter().fold(Vec3::ZERO, |a, p| a + p.translation) / count as f64;
        for p in &mut placements {
            p.translation = p.translation - centroid;
        }
        let boxes: Vec<Aabb> = placements.iter().map(|p| rotated_bounds(bounds, p)).collect();
        let separated = (0..boxes.len()).all(|i| (i + 1..boxes.len()).all(|j| !strictly_overlap(&boxes[i], &boxes[j])));
        if !separated {
            continue;
        }
        let centers: Vec<Vec3> = placements.iter().map(|p| p.translation).collect();
        if in_frustum(&cameras, &centers, radius) {
            return Ok(PoseDraw { pitch, roll, distance, count, placements });
        }
    }
    Err(SamplerError::Placement { image_id: first_image, count, attempts: PLACEMENT_ATTEMPTS })
}

/// Enumerates every sample of the plan in image-id order:
/// model × environment × material × pose × yaw step.
pub fn draw_samples(plan: &DatasetPlan, geometry: &PlacementGeometry) -> Result<Vec<SceneSample>, SamplerError> {
    plan.ranges.check()?;
    if geometry.model_bounds.len() != plan.models.len() {
        return Err(SamplerError::GeometryMismatch { expected: plan.models.len(), got: geometry.model_bounds.len() });
    }
    let yaws = yaw_schedule(plan.yaw_steps, plan.ranges.yaw);
    let mut out = Vec::with_capacity(plan.target_images as usize);
    let mut combo = 0u64;
    for (mi, model) in plan.models.iter().enumerate() {
        for env in &plan.environments {
            for material in 0..plan.mixture_size {
                for pose in 0..plan.poses_per_combo {
                    let first = out.len() as u64;
                    let d = draw_pose(plan, geometry, &yaws, mi, combo, pose, first)?;
                    for &yaw in &yaws {
                        out.push(SceneSample {
                            image_id: out.len() as u64,
                            model: model.clone(),
                            environment: env.clone(),
                            material,
                            combo,
                            pose,
                            pitch: d.pitch,
                            roll: d.roll,
                            yaw,
                            distance: d.distance,
                            object_count: d.count,
                            placements: d.placements.clone(),
                        });
                    }
                }
                combo += 1;
            }
        }
    }
    Ok(out)
}

//! Parametric multirotor meshes: central body, radial arms, one rotor disc per
//! arm and landing legs, laid out with `arms`-fold symmetry about +Y.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::mesh::{Mesh, MeshError};
use super::transform::RigidTransform;
use crate::math::{Mat3, Vec3};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UavParams {
    pub arms: u32,
    /// Body centre to rotor hub, metres.
    pub arm_length: f64,
    pub body_radius: f64,
    pub rotor_radius: f64,
    pub gear_height: f64,
}

impl Default for UavParams {
    /// Roughly 0.9 m tip to tip.
    fn default() -> Self {
        UavParams { arms: 4, arm_length: 0.33, body_radius: 0.1, rotor_radius: 0.12, gear_height: 0.12 }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum UavError {
    #[error("arm count must be 4 or 6, got {0}")]
    ArmCount(u32),
    #[error("dimension `{0}` must be positive and finite")]
    NonPositive(&'static str),
    #[error("arm_length ({arm_length}) must exceed body_radius ({body_radius})")]
    ArmTooShort { arm_length: f64, body_radius: f64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn push_quad(m: &mut Mesh, corners: [Vec3; 4], normal: Vec3) {
    let base = m.vertices.len() as u32;
    let uv = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    for (p, t) in corners.iter().zip(uv) {
        m.vertices.push(*p);
        m.normals.push(normal);
        m.uvs.push(t);
    }
    m.triangles.push([base, base + 1, base + 2]);
    m.triangles.push([base, base + 2, base + 3]);
}

/// Closed axis-aligned box with outward faces.
fn cuboid(min: Vec3, max: Vec3) -> Mesh {
    let mut m = Mesh::empty("uav");
    let (a, b) = (min, max);
    let p = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    push_quad(&mut m, [p(b.x, a.y, a.z), p(b.x, b.y, a.z), p(b.x, b.y, b.z), p(b.x, a.y, b.z)], Vec3::X);
    push_quad(&mut m, [p(a.x, a.y, a.z), p(a.x, a.y, b.z), p(a.x, b.y, b.z), p(a.x, b.y, a.z)], -Vec3::X);
    push_quad(&mut m, [p(a.x, b.y, a.z), p(a.x, b.y, b.z), p(b.x, b.y, b.z), p(b.x, b.y, a.z)], Vec3::Y);
    push_quad(&mut m, [p(a.x, a.y, a.z), p(b.x, a.y, a.z), p(b.x, a.y, b.z), p(a.x, a.y, b.z)], -Vec3::Y);
    push_quad(&mut m, [p(a.x, a.y, b.z), p(b.x, a.y, b.z), p(b.x, b.y, b.z), p(a.x, b.y, b.z)], Vec3::Z);
    push_quad(&mut m, [p(a.x, a.y, a.z), p(a.x, b.y, a.z), p(b.x, b.y, a.z), p(b.x, a.y, a.z)], -Vec3::Z);
    m
}

/// Capped cylinder around +Y with `sides` facets, first vertex on +X.
fn cylinder(radius: f64, y0: f64, y1: f64, sides: u32) -> Mesh {
    let mut m = Mesh::empty("uav");
    let ring = |k: u32| {
        let a = TAU * k as f64 / sides as f64;
        (a.cos(), -a.sin())
    };
    // Side wall with smooth radial normals.
    for k in 0..=sides {
        let (c, s) = ring(k % sides);
        let n = Vec3::new(c, 0.0, s);
        let u = k as f64 / sides as f64;
        m.vertices.push(Vec3::new(radius * c, y0, radius * s));
        m.normals.push(n);
        m.uvs.push([u, 0.0]);
        m.vertices.push(Vec3::new(radius * c, y1, radius * s));
        m.normals.push(n);
        m.uvs.push([u, 1.0]);
    }
    for k in 0..sides {
        let b = 2 * k;
        m.triangles.push([b, b + 2, b + 3]);
        m.triangles.push([b, b + 3, b + 1]);
    }
    // Caps as fans around a centre vertex.
    for (y, n) in [(y1, Vec3::Y), (y0, -Vec3::Y)] {
        let centre = m.vertices.len() as u32;
        m.vertices.push(Vec3::new(0.0, y, 0.0));
        m.normals.push(n);
        m.uvs.push([0.5, 0.5]);
        for k in 0..sides {
            let (c, s) = ring(k);
            m.vertices.push(Vec3::new(radius * c, y, radius * s));
            m.normals.push(n);
            m.uvs.push([0.5 + 0.5 * c, 0.5 + 0.5 * s]);
        }
        for k in 0..sides {
            let a = centre + 1 + k;
            let b = centre + 1 + (k + 1) % sides;
            if n.y > 0.0 {
                m.triangles.push([centre, a, b]);
            } else {
                m.triangles.push([centre, b, a]);
            }
        }
    }
    m
}

fn check_dim(name: &'static str, v: f64) -> Result<(), UavError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(UavError::NonPositive(name))
    }
}

/// Builds a symmetric multirotor mesh. The seed picks secondary proportions
/// (body facet count and height, arm thickness, rotor facets, canopy) while
/// keeping the `arms`-fold symmetry exact.
pub fn generate_uav_mesh(params: &UavParams, seed: u64) -> Result<Mesh, UavError> {
    let UavParams { arms, arm_length, body_radius, rotor_radius, gear_height } = *params;
    if arms != 4 && arms != 6 {
        return Err(UavError::ArmCount(arms));
    }
    check_dim("arm_length", arm_length)?;
    check_dim("body_radius", body_radius)?;
    check_dim("rotor_radius", rotor_radius)?;
    check_dim("gear_height", gear_height)?;
    if arm_length <= body_radius {
        return Err(UavError::ArmTooShort { arm_length, body_radius });
    }

    let mut rng = Stream::from_parts(&[0x55AA_0001, seed, arms as u64]);
    let body_sides = arms * if rng.next_f64() < 0.5 { 2 } else { 4 };
    let body_h = body_radius * rng.uniform(0.5, 0.9);
    let arm_t = body_radius * rng.uniform(0.18, 0.3);
    let rotor_sides = if rng.next_f64() < 0.5 { 16 } else { 24 };
    let canopy = rng.next_f64() < 0.5;
    let motor_r = (rotor_radius * 0.18).min(arm_t * 1.2);
    let motor_h = arm_t * 1.5;
    let disc_t = (rotor_radius * 0.04).max(0.004);

    let mut mesh = Mesh::empty("uav");
    let top = 0.5 * body_h;
    let bottom = -0.5 * body_h;
    mesh.append(&cylinder(body_radius, bottom, top, body_sides));
    if canopy {
        mesh.append(&cylinder(body_radius * 0.6, top, top + body_h * 0.4, body_sides));
    }

    let step = TAU / arms as f64;
    for k in 0..arms {
        let arm_frame = RigidTransform { rotation: Mat3::rotation_y(step * k as f64), translation: Vec3::ZERO };
        let mut part = cuboid(
            Vec3::new(body_radius * 0.8, -0.5 * arm_t, -0.5 * arm_t),
            Vec3::new(arm_length, 0.5 * arm_t, 0.5 * arm_t),
        );
        let hub = Vec3::new(arm_length, 0.0, 0.0);
        let motor = cylinder(motor_r, 0.5 * arm_t, 0.5 * arm_t + motor_h, 12);
        part.append(&motor.transformed(&RigidTransform::translation(hub)));
        let disc_y = 0.5 * arm_t + motor_h;
        let disc = cylinder(rotor_radius, disc_y, disc_y + disc_t, rotor_sides);
        part.append(&disc.transformed(&RigidTransform::translation(hub)));
        mesh.append(&part.transformed(&arm_frame));

        // Landing legs sit between arms.
        let leg_frame = RigidTransform {
            rotation: Mat3::rotation_y(step * (k as f64 + 0.5)),
            translation: Vec3::ZERO,
        };
        let leg_w = arm_t * 0.6;
        let leg_x = body_radius * 0.75;
        let leg = cuboid(
            Vec3::new(leg_x - 0.5 * leg_w, bottom - gear_height, -0.5 * leg_w),
            Vec3::new(leg_x + 0.5 * leg_w, bottom, 0.5 * leg_w),
        );
        let foot = cuboid(
            Vec3::new(leg_x - 1.5 * leg_w, bottom - gear_height - leg_w * 0.5, -leg_w),
            Vec3::new(leg_x + 1.5 * leg_w, bottom - gear_height, 1.0 * leg_w),
        );
        mesh.append(&leg.transformed(&leg_frame));
        mesh.append(&foot.transformed(&leg_frame));
    }
    mesh.material_slot = format!("uav{arms}");
    mesh.validate()?;
    Ok(mesh)
}

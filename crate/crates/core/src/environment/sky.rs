//! Procedural equirectangular skies: a horizon-to-zenith gradient, an
//! energy-conserving sun disc, optional noise clouds and a matte ground band.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::envmap::{uv_to_dir, EnvMap};
use crate::math::Vec3;
use crate::noise::fbm;

/// Angular radius of the sun disc.
pub const SUN_RADIUS_DEG: f64 = 0.27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkyCondition {
    ClearDay,
    PartlyCloudy,
    Overcast,
    Twilight,
    DuskWarm,
}

impl SkyCondition {
    pub const ALL: [SkyCondition; 5] = [
        SkyCondition::ClearDay,
        SkyCondition::PartlyCloudy,
        SkyCondition::Overcast,
        SkyCondition::Twilight,
        SkyCondition::DuskWarm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SkyCondition::ClearDay => "clear_day",
            SkyCondition::PartlyCloudy => "partly_cloudy",
            SkyCondition::Overcast => "overcast",
            SkyCondition::Twilight => "twilight",
            SkyCondition::DuskWarm => "dusk_warm",
        }
    }

    fn look(self) -> Look {
        match self {
            SkyCondition::ClearDay => Look {
                zenith: Vec3::new(0.16, 0.32, 0.78),
                horizon: Vec3::new(0.62, 0.76, 0.96),
                sun_irradiance: 12.0,
                sun_color: Vec3::new(1.0, 0.96, 0.9),
                glow: 0.6,
                clouds: 0.0,
                overcast: false,
                ground: Vec3::new(0.24, 0.22, 0.16),
            },
            SkyCondition::PartlyCloudy => Look {
                zenith: Vec3::new(0.2, 0.36, 0.75),
                horizon: Vec3::new(0.66, 0.76, 0.9),
                sun_irradiance: 7.0,
                sun_color: Vec3::new(1.0, 0.96, 0.9),
                glow: 0.4,
                clouds: 0.5,
                overcast: false,
                ground: Vec3::new(0.22, 0.22, 0.17),
            },
            SkyCondition::Overcast => Look {
                zenith: Vec3::new(0.62, 0.64, 0.68),
                horizon: Vec3::new(0.5, 0.52, 0.55),
                sun_irradiance: 0.25,
                sun_color: Vec3::new(1.0, 1.0, 1.0),
                glow: 0.15,
                clouds: 0.0,
                overcast: true,
                ground: Vec3::new(0.2, 0.2, 0.17),
            },
            SkyCondition::Twilight => Look {
                zenith: Vec3::new(0.012, 0.018, 0.05),
                horizon: Vec3::new(0.09, 0.06, 0.06),
                sun_irradiance: 0.15,
                sun_color: Vec3::new(1.0, 0.45, 0.2),
                glow: 0.08,
                clouds: 0.0,
                overcast: false,
                ground: Vec3::new(0.15, 0.14, 0.12),
            },
            SkyCondition::DuskWarm => Look {
                zenith: Vec3::new(0.1, 0.1, 0.22),
                horizon: Vec3::new(0.9, 0.5, 0.22),
                sun_irradiance: 3.0,
                sun_color: Vec3::new(1.0, 0.55, 0.25),
                glow: 0.9,
                clouds: 0.0,
                overcast: false,
                ground: Vec3::new(0.2, 0.16, 0.12),
            },
        }
    }
}

impl fmt::Display for SkyCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SkyCondition {
    type Err = SkyError;
    fn from_str(s: &str) -> Result<Self, SkyError> {
        SkyCondition::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| SkyError::UnknownCondition(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SkyError {
    #[error("unknown sky condition `{0}` (expected clear_day, partly_cloudy, overcast, twilight or dusk_warm)")]
    UnknownCondition(String),
    #[error("width must be even and at least 64, got {0}")]
    BadWidth(usize),
    #[error("sun elevation {0} outside [-10, 90] degrees")]
    BadElevation(f64),
    #[error("sun azimuth must be finite")]
    BadAzimuth,
}

struct Look {
    zenith: Vec3,
    horizon: Vec3,
    /// Irradiance of the disc on a surface facing it.
    sun_irradiance: f64,
    sun_color: Vec3,
    glow: f64,
    clouds: f64,
    overcast: bool,
    ground: Vec3,
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Azimuth is measured from −Z toward +X; elevation from the horizon.
pub fn sun_direction(azimuth_deg: f64, elevation_deg: f64) -> Vec3 {
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    Vec3::new(el.cos() * az.sin(), el.sin(), -el.cos() * az.cos())
}

fn sky_radiance(look: &Look, d: Vec3, sun: Vec3, sun_scale: f64, seed: u64, u: f64) -> Vec3 {
    let up = d.y.max(0.0);
    let mut c = if look.overcast {
        // CIE overcast falloff from zenith to horizon.
        look.zenith * ((1.0 + 2.0 * up) / 3.0) + look.horizon * (0.25 * (1.0 - up))
    } else {
        look.horizon + (look.zenith - look.horizon) * up.sqrt()
    };
    let gamma = d.dot(sun).clamp(-1.0, 1.0).acos();
    c += look.sun_color * (look.glow * sun_scale * ((-gamma / 0.12).exp() + 0.25 * (-gamma / 0.6).exp()));
    if look.clouds > 0.0 && d.y > 0.0 {
        // Cloud noise in (longitude, elevation) space, denser toward the horizon.
        let el = d.y.asin() / (0.5 * PI);
        let n = fbm(seed ^ 0xC10D, u * 16.0, el * 6.0, 16, 5);
        let cover = smoothstep(1.0 - look.clouds, 1.0 - look.clouds + 0.2, n) * smoothstep(0.0, 0.08, d.y);
        let cloud = Vec3::new(0.92, 0.92, 0.94) * (0.75 + 0.5 * n) * (0.6 + 0.4 * sun_scale);
        c = c + (cloud - c) * cover;
    }
    c
}

/// Builds a sky map for `condition` with the sun at the given geometry.
pub fn synthesize_sky(
    condition: SkyCondition,
    sun_azimuth: f64,
    sun_elevation: f64,
    width: usize,
    seed: u64,
) -> Result<EnvMap, SkyError> {
    if width < 64 || !width.is_multiple_of(2) {
        return Err(SkyError::BadWidth(width));
    }
    if !(-10.0..=90.0).contains(&sun_elevation) {
        return Err(SkyError::BadElevation(sun_elevation));
    }
    if !sun_azimuth.is_finite() {
        return Err(SkyError::BadAzimuth);
    }
    let look = condition.look();
    let height = width / 2;
    let sun = sun_direction(sun_azimuth, sun_elevation);
    // Atmospheric extinction toward the horizon.
    let sun_scale = smoothstep(-4.0, 6.0, sun_elevation);

    let sky_irradiance = PI * (0.5 * (look.zenith + look.horizon)).luminance();
    let sun_on_ground = look.sun_irradiance * sun_scale * sun.y.max(0.0);
    let ground_level = (sky_irradiance + sun_on_ground) / PI;

    let mut radiance = Vec::with_capacity(width * height);
    for row in 0..height {
        let v = (row as f64 + 0.5) / height as f64;
        for col in 0..width {
            let u = (col as f64 + 0.5) / width as f64;
            let d = uv_to_dir(u, v);
            let c = if d.y >= 0.0 {
                sky_radiance(&look, d, sun, sun_scale, seed, u)
            } else {
                let grain = fbm(seed ^ 0x6A0D, u * 64.0, v * 32.0, 64, 3);
                look.ground * (ground_level * (0.85 + 0.3 * grain))
            };
            radiance.push(c);
        }
    }

    let sun_r = SUN_RADIUS_DEG.to_radians();
    if sun_elevation > -SUN_RADIUS_DEG && look.sun_irradiance > 0.0 && sun_scale > 0.0 {
        deposit_sun(&mut radiance, width, height, sun, sun_r, look.sun_color * (look.sun_irradiance * sun_scale));
    }

    let name = format!("{}_az{}_el{}", condition.name(), sun_azimuth, sun_elevation);
    EnvMap::new(width, height, radiance, name).map_err(|_| SkyError::BadWidth(width))
}

/// Spreads the disc's irradiance over the texels it covers, preserving the
/// total, so the sun survives at any resolution.
fn deposit_sun(radiance: &mut [Vec3], width: usize, height: usize, sun: Vec3, radius: f64, irradiance: Vec3) {
    let (w, h) = (width as f64, height as f64);
    let theta_sun = sun.y.clamp(-1.0, 1.0).acos();
    let texel = PI / h;
    let reach = radius + 2.0 * texel;
    let row_lo = (((theta_sun - reach) / PI * h).floor().max(0.0)) as usize;
    let row_hi = ((((theta_sun + reach) / PI * h).ceil()) as usize).min(height);
    const SUB: usize = 8;
    let cos_r = radius.cos();
    let mut cover: Vec<(usize, f64, f64)> = Vec::new();
    for row in row_lo..row_hi {
        let c0 = (PI * row as f64 / h).cos();
        let c1 = (PI * (row + 1) as f64 / h).cos();
        let omega = TAU / w * (c0 - c1);
        for col in 0..width {
            let centre = uv_to_dir((col as f64 + 0.5) / w, (row as f64 + 0.5) / h);
            if centre.dot(sun) < (reach + texel).min(PI).cos() {
                continue;
            }
            let mut hits = 0;
            for i in 0..SUB {
                let ct = c0 + (c1 - c0) * (i as f64 + 0.5) / SUB as f64;
                let st = (1.0 - ct * ct).max(0.0).sqrt();
                for j in 0..SUB {
                    let u = (col as f64 + (j as f64 + 0.5) / SUB as f64) / w;
                    let phi = (u - 0.5) * TAU;
                    let d = Vec3::new(st * phi.sin(), ct, -st * phi.cos());
                    if d.dot(sun) >= cos_r {
                        hits += 1;
                    }
                }
            }
            if hits > 0 {
                cover.push((row * width + col, hits as f64 / (SUB * SUB) as f64 * omega, omega));
            }
        }
    }
    if cover.is_empty() {
        let (u, v) = super::envmap::dir_to_uv(sun);
        let col = ((u * w) as usize).min(width - 1);
        let row = ((v * h) as usize).min(height - 1);
        let c0 = (PI * row as f64 / h).cos();
        let c1 = (PI * (row + 1) as f64 / h).cos();
        let omega = TAU / w * (c0 - c1);
        cover.push((row * width + col, omega, omega));
    }
    let total: f64 = cover.iter().map(|c| c.1).sum();
    for (idx, covered, omega) in cover {
        radiance[idx] += irradiance * (covered / total / omega);
    }
}

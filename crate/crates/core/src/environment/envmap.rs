use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::math::Vec3;

/// Longitude-latitude radiance map. Row 0 is the zenith; column `width/2`
/// faces −Z.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvMap {
    pub width: usize,
    pub height: usize,
    /// Row-major linear RGB.
    pub radiance: Vec<Vec3>,
    pub name: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("map is {width}x{height}; equirectangular maps need width = 2 x height")]
    NotEquirectangular { width: usize, height: usize },
    #[error("texel buffer has {got} entries, expected {expected}")]
    SizeMismatch { got: usize, expected: usize },
    #[error("texel {0} is negative or non-finite")]
    BadTexel(usize),
    #[error("map has zero total luminance and cannot be importance sampled")]
    CannotSample,
}

impl EnvMap {
    pub fn new(width: usize, height: usize, radiance: Vec<Vec3>, name: impl Into<String>) -> Result<EnvMap, EnvError> {
        if height == 0 || width != 2 * height {
            return Err(EnvError::NotEquirectangular { width, height });
        }
        if radiance.len() != width * height {
            return Err(EnvError::SizeMismatch { got: radiance.len(), expected: width * height });
        }
        if let Some(i) = radiance
            .iter()
            .position(|c| !c.is_finite() || c.min_component() < 0.0)
        {
            return Err(EnvError::BadTexel(i));
        }
        Ok(EnvMap { width, height, radiance, name: name.into() })
    }

    pub fn uniform(width: usize, value: Vec3, name: impl Into<String>) -> Result<EnvMap, EnvError> {
        let height = width / 2;
        EnvMap::new(width, height, vec![value; width * height], name)
    }

    #[inline]
    pub fn texel(&self, col: usize, row: usize) -> Vec3 {
        self.radiance[row * self.width + col]
    }

    /// Mean luminance weighted by texel solid angle.
    pub fn mean_luminance(&self) -> f64 {
        let mut sum = 0.0;
        for row in 0..self.height {
            let w = self.row_solid_angle(row) / self.width as f64;
            for col in 0..self.width {
                sum += self.texel(col, row).luminance() * w;
            }
        }
        sum / (4.0 * PI)
    }

    /// Solid angle of the whole row `row` (all columns together).
    pub fn row_solid_angle(&self, row: usize) -> f64 {
        let h = self.height as f64;
        let t0 = PI * row as f64 / h;
        let t1 = PI * (row + 1) as f64 / h;
        TAU * (t0.cos() - t1.cos())
    }

    /// Piecewise-constant integral `∫ L dω` over the sphere.
    pub fn integrate(&self) -> Vec3 {
        let mut sum = Vec3::ZERO;
        for row in 0..self.height {
            let w = self.row_solid_angle(row) / self.width as f64;
            for col in 0..self.width {
                sum += self.texel(col, row) * w;
            }
        }
        sum
    }

    /// Multiplies every texel by `s`.
    pub fn scaled(&self, s: f64) -> EnvMap {
        EnvMap {
            width: self.width,
            height: self.height,
            radiance: self.radiance.iter().map(|c| *c * s).collect(),
            name: self.name.clone(),
        }
    }
}

/// Direction to `(u, v)` in `[0,1)²`: `u` follows longitude, `v = θ/π` from
/// the zenith.
#[inline]
pub fn dir_to_uv(dir: Vec3) -> (f64, f64) {
    let phi = dir.x.atan2(-dir.z);
    let mut u = 0.5 + phi / TAU;
    if u >= 1.0 {
        u -= 1.0;
    }
    let v = dir.y.clamp(-1.0, 1.0).acos() / PI;
    (u, v)
}

#[inline]
pub fn uv_to_dir(u: f64, v: f64) -> Vec3 {
    let phi = (u - 0.5) * TAU;
    let theta = v * PI;
    let st = theta.sin();
    Vec3::new(st * phi.sin(), theta.cos(), -st * phi.cos())
}

/// Bilinear radiance lookup with longitudinal wraparound; rows clamp at
/// the poles.
pub fn lookup(map: &EnvMap, dir: Vec3) -> Vec3 {
    let (u, v) = dir_to_uv(dir);
    let x = u * map.width as f64 - 0.5;
    let y = (v * map.height as f64 - 0.5).clamp(0.0, (map.height - 1) as f64);
    let x0 = x.floor();
    let tx = x - x0;
    let w = map.width as i64;
    let c0 = (x0 as i64).rem_euclid(w) as usize;
    let c1 = (x0 as i64 + 1).rem_euclid(w) as usize;
    let y0 = y.floor();
    let ty = y - y0;
    let r0 = y0 as usize;
    let r1 = (r0 + 1).min(map.height - 1);
    let lerp = |a: Vec3, b: Vec3, t: f64| a + (b - a) * t;
    let top = lerp(map.texel(c0, r0), map.texel(c1, r0), tx);
    let bottom = lerp(map.texel(c0, r1), map.texel(c1, r1), tx);
    lerp(top, bottom, ty)
}

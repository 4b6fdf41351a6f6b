use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use super::envmap::{dir_to_uv, lookup, EnvError, EnvMap};
use crate::math::Vec3;
use crate::rng::Stream;

/// Luminance importance sampler over texels. Each texel's weight is its
/// luminance times its exact solid angle (the integral of sin θ across the
/// row), and directions are drawn area-uniformly inside the chosen texel,
/// so the density is constant per texel.
#[derive(Debug, Clone)]
pub struct EnvSampler {
    map: Arc<EnvMap>,
    /// Marginal CDF over rows, length `height + 1`.
    row_cdf: Vec<f64>,
    /// Per-row conditional CDFs over columns, each of length `width + 1`.
    col_cdf: Vec<f64>,
    /// Texel probabilities (sum to 1).
    texel_prob: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSample {
    pub dir: Vec3,
    pub radiance: Vec3,
    pub pdf: f64,
}

fn upper_bound(cdf: &[f64], x: f64) -> usize {
    // Index i with cdf[i] <= x < cdf[i+1], skipping zero-width bins.
    let n = cdf.len() - 1;
    let mut lo = 0;
    let mut hi = n;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if cdf[mid + 1] <= x {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo.min(n - 1)
}

impl EnvSampler {
    pub fn new(map: Arc<EnvMap>) -> Result<EnvSampler, EnvError> {
        let (w, h) = (map.width, map.height);
        let dphi = TAU / w as f64;
        let lum: Vec<f64> = map.radiance.iter().map(|c| c.luminance().max(0.0)).collect();
        // Bilinear lookup inside a texel reads its 3x3 neighbourhood, so the
        // table uses the neighbourhood maximum to keep radiance/pdf bounded.
        let mut texel_weight = vec![0.0; w * h];
        for row in 0..h {
            let t0 = PI * row as f64 / h as f64;
            let t1 = PI * (row + 1) as f64 / h as f64;
            let omega = dphi * (t0.cos() - t1.cos());
            let rows = row.saturating_sub(1)..=(row + 1).min(h - 1);
            for col in 0..w {
                let mut m = 0.0f64;
                for r in rows.clone() {
                    for c in [(col + w - 1) % w, col, (col + 1) % w] {
                        m = m.max(lum[r * w + c]);
                    }
                }
                texel_weight[row * w + col] = m * omega;
            }
        }
        let total: f64 = texel_weight.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(EnvError::CannotSample);
        }
        let texel_prob: Vec<f64> = texel_weight.iter().map(|x| x / total).collect();
        let mut row_cdf = Vec::with_capacity(h + 1);
        let mut col_cdf = Vec::with_capacity(h * (w + 1));
        row_cdf.push(0.0);
        let mut acc = 0.0;
        for row in 0..h {
            let probs = &texel_prob[row * w..(row + 1) * w];
            let row_sum: f64 = probs.iter().sum();
            acc += row_sum;
            row_cdf.push(acc);
            let mut c = 0.0;
            col_cdf.push(0.0);
            for &p in probs {
                c += if row_sum > 0.0 { p / row_sum } else { 1.0 / w as f64 };
                col_cdf.push(c);
            }
            // Pin the end so searches never run past the last column.
            *col_cdf.last_mut().unwrap() = 1.0;
        }
        *row_cdf.last_mut().unwrap() = 1.0;
        Ok(EnvSampler { map, row_cdf, col_cdf, texel_prob })
    }

    pub fn map(&self) -> &EnvMap {
        &self.map
    }

    pub fn map_arc(&self) -> &Arc<EnvMap> {
        &self.map
    }

    pub fn texel_probabilities(&self) -> &[f64] {
        &self.texel_prob
    }

    fn texel_solid_angle(&self, row: usize) -> f64 {
        let h = self.map.height as f64;
        let t0 = PI * row as f64 / h;
        let t1 = PI * (row + 1) as f64 / h;
        TAU / self.map.width as f64 * (t0.cos() - t1.cos())
    }

    /// Density (per steradian) that [`sample_env`] assigns to `dir`.
    pub fn pdf(&self, dir: Vec3) -> f64 {
        let (w, h) = (self.map.width, self.map.height);
        let (u, v) = dir_to_uv(dir);
        let col = ((u * w as f64) as usize).min(w - 1);
        let row = ((v * h as f64) as usize).min(h - 1);
        self.texel_prob[row * w + col] / self.texel_solid_angle(row)
    }

    pub fn sample(&self, rng: &mut Stream) -> EnvSample {
        let (w, h) = (self.map.width, self.map.height);
        let row = upper_bound(&self.row_cdf, rng.next_f64());
        let cdf = &self.col_cdf[row * (w + 1)..(row + 1) * (w + 1)];
        let col = upper_bound(cdf, rng.next_f64());
        let u = (col as f64 + rng.next_f64()) / w as f64;
        let c0 = (PI * row as f64 / h as f64).cos();
        let c1 = (PI * (row + 1) as f64 / h as f64).cos();
        let cos_t = c0 + (c1 - c0) * rng.next_f64();
        let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
        let phi = (u - 0.5) * TAU;
        let dir = Vec3::new(sin_t * phi.sin(), cos_t, -sin_t * phi.cos());
        let pdf = self.texel_prob[row * w + col] / self.texel_solid_angle(row);
        EnvSample { dir, radiance: lookup(&self.map, dir), pdf }
    }
}

/// Draws one importance-sampled direction from the environment.
pub fn sample_env(sampler: &EnvSampler, rng: &mut Stream) -> EnvSample {
    sampler.sample(rng)
}

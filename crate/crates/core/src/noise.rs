//! Hash-based value noise, periodic on an integer lattice.

use crate::rng::mix64;

#[inline]
fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = mix64(seed ^ mix64((ix as u64).wrapping_mul(0x8DA6_B343) ^ (iy as u64).wrapping_mul(0xD816_3841)));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise in `[0, 1]`, tiling with integer `period` (0 disables tiling).
pub fn value_noise(seed: u64, x: f64, y: f64, period: i64) -> f64 {
    let fx = x.floor();
    let fy = y.floor();
    let tx = smooth(x - fx);
    let ty = smooth(y - fy);
    let wrap = |i: i64| if period > 0 { i.rem_euclid(period) } else { i };
    let (x0, y0) = (fx as i64, fy as i64);
    let (a, b) = (wrap(x0), wrap(x0 + 1));
    let (c, d) = (wrap(y0), wrap(y0 + 1));
    let v00 = lattice(seed, a, c);
    let v10 = lattice(seed, b, c);
    let v01 = lattice(seed, a, d);
    let v11 = lattice(seed, b, d);
    let top = v00 + (v10 - v00) * tx;
    let bottom = v01 + (v11 - v01) * tx;
    top + (bottom - top) * ty
}

/// Fractal sum of `octaves` value-noise layers, normalized to `[0, 1]`.
pub fn fbm(seed: u64, x: f64, y: f64, base_period: i64, octaves: u32) -> f64 {
    let mut sum = 0.0;
    let mut amp = 1.0;
    let mut norm = 0.0;
    let mut freq = 1.0;
    for o in 0..octaves {
        let period = if base_period > 0 { base_period << o } else { 0 };
        sum += amp * value_noise(seed.wrapping_add(o as u64), x * freq, y * freq, period);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

/// Pseudo-random point in the unit cell `(ix, iy)`.
pub fn cell_point(seed: u64, ix: i64, iy: i64) -> (f64, f64) {
    (lattice(seed, ix, iy), lattice(seed ^ 0xA5A5_A5A5, ix, iy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_bounded_and_periodic() {
        for i in 0..200 {
            let x = i as f64 * 0.137;
            let y = i as f64 * 0.311;
            let v = fbm(3, x, y, 4, 4);
            assert!((0.0..=1.0).contains(&v));
            let w = value_noise(3, x, y, 4);
            let shifted = value_noise(3, x + 4.0, y + 8.0, 4);
            assert!((w - shifted).abs() < 1e-12);
        }
    }
}

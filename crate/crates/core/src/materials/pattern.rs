use super::mixture::{MaterialSpec, PatternKind};
use crate::math::Vec3;
use crate::noise::{cell_point, fbm};
use crate::rng::hash_key;

#[inline]
fn wrap01(x: f64) -> f64 {
    let w = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs.
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    a + (b - a) * t.clamp(0.0, 1.0)
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn pattern_seed(spec: &MaterialSpec) -> u64 {
    hash_key(&[spec.id as u64, spec.color_a[0].to_bits(), spec.color_b[1].to_bits()])
}

/// Distances to the nearest and second-nearest jittered feature point on a
/// `period`-tiled lattice.
fn voronoi_f1_f2(seed: u64, x: f64, y: f64, period: i64) -> (f64, f64) {
    let (cx, cy) = (x.floor() as i64, y.floor() as i64);
    let mut f1 = f64::INFINITY;
    let mut f2 = f64::INFINITY;
    for dy in -1..=1 {
        for dx in -1..=1 {
            let (ix, iy) = (cx + dx, cy + dy);
            let (jx, jy) = cell_point(seed, ix.rem_euclid(period), iy.rem_euclid(period));
            let px = ix as f64 + 0.15 + 0.7 * jx;
            let py = iy as f64 + 0.15 + 0.7 * jy;
            let d = ((px - x).powi(2) + (py - y).powi(2)).sqrt();
            if d < f1 {
                f2 = f1;
                f1 = d;
            } else if d < f2 {
                f2 = d;
            }
        }
    }
    (f1, f2)
}

/// Surface colour of `spec` at texture coordinate `uv` (wrapped into the
/// unit square). Pure; output stays in `[0,1]³`.
pub fn sample_pattern(spec: &MaterialSpec, uv: [f64; 2]) -> Vec3 {
    let a = spec.color_a();
    let b = spec.color_b();
    let u = wrap01(uv[0]);
    let v = wrap01(uv[1]);
    let s = spec.scale;
    let period = (s.round() as i64).max(1);
    match spec.pattern {
        PatternKind::Solid => a,
        PatternKind::Checker => {
            let parity = ((u * s).floor() as i64 + (v * s).floor() as i64).rem_euclid(2);
            if parity == 0 {
                a
            } else {
                b
            }
        }
        PatternKind::Stripes => {
            if (((u + v) * s).floor() as i64).rem_euclid(2) == 0 {
                a
            } else {
                b
            }
        }
        PatternKind::PolkaDots => {
            let fx = (u * s).fract() - 0.5;
            let fy = (v * s).fract() - 0.5;
            if fx * fx + fy * fy < 0.3 * 0.3 {
                b
            } else {
                a
            }
        }
        PatternKind::VoronoiTiles => {
            let (f1, f2) = voronoi_f1_f2(pattern_seed(spec), u * s, v * s, period);
            if f2 - f1 < 0.08 {
                b
            } else {
                a
            }
        }
        PatternKind::FbmNoise => {
            let t = fbm(pattern_seed(spec), u * s, v * s, period, 4);
            lerp(a, b, smoothstep(0.3, 0.7, t))
        }
        PatternKind::WoodRings => {
            let n = fbm(pattern_seed(spec), u * 4.0, v * 4.0, 4, 3);
            let d = ((u - 0.5).powi(2) + (v - 0.5).powi(2)).sqrt();
            let t = 0.5 + 0.5 * (std::f64::consts::TAU * (d * s + 0.6 * n)).sin();
            lerp(a, b, t.powf(1.5))
        }
        PatternKind::CarbonWeave => {
            // 2/2 twill: the over/under tow alternates along diagonals.
            let i = (u * s).floor() as i64;
            let j = (v * s).floor() as i64;
            if (i + j).rem_euclid(4) < 2 {
                a
            } else {
                b
            }
        }
    }
}

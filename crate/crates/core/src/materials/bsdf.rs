//! Scattering models. All directions point away from the surface; `n` is the
//! outward shading normal.

use std::f64::consts::{FRAC_1_PI, PI, TAU};

use thiserror::Error;

use super::mixture::{BsdfKind, MaterialSpec};
use crate::math::Vec3;
use crate::rng::Stream;

#[derive(Debug, Error, PartialEq)]
pub enum BsdfError {
    #[error("`{name}` is not unit length (|v| = {length})")]
    NotUnit { name: &'static str, length: f64 },
}

fn check_unit(name: &'static str, v: Vec3) -> Result<(), BsdfError> {
    let length = v.length();
    if (length - 1.0).abs() > 1e-3 || !length.is_finite() {
        return Err(BsdfError::NotUnit { name, length });
    }
    Ok(())
}

/// Result of importance-sampling a lobe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsdfSample {
    pub wi: Vec3,
    /// `f · |cos| / pdf`, or the lobe weight for delta lobes.
    pub weight: Vec3,
    /// Solid-angle density of `wi`; meaningless when `delta` is set.
    pub pdf: f64,
    /// True when the lobe cannot be evaluated for an arbitrary direction.
    pub delta: bool,
}

impl BsdfSample {
    fn absorbed() -> BsdfSample {
        BsdfSample { wi: Vec3::Y, weight: Vec3::ZERO, pdf: 0.0, delta: true }
    }
}

#[inline]
fn alpha_of(spec: &MaterialSpec) -> f64 {
    let r = spec.roughness_or_default();
    (r * r).max(1e-4)
}

/// GGX normal distribution for `cos_h = n·h`.
#[inline]
fn ggx_d(cos_h: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let t = cos_h * cos_h * (a2 - 1.0) + 1.0;
    a2 / (PI * t * t)
}

/// Smith masking for one direction with `cos_v = n·v`.
#[inline]
fn smith_g1(cos_v: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    2.0 * cos_v / (cos_v + (a2 + (1.0 - a2) * cos_v * cos_v).sqrt())
}

#[inline]
fn schlick(f0: Vec3, cos: f64) -> Vec3 {
    let m = (1.0 - cos).clamp(0.0, 1.0).powi(5);
    f0 + (Vec3::ONE - f0) * m
}

/// Unpolarized dielectric Fresnel reflectance; `cos_i > 0`, `eta = n_i / n_t`.
fn fresnel_dielectric(cos_i: f64, eta: f64) -> f64 {
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i).max(0.0);
    if sin2_t >= 1.0 {
        return 1.0;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let rs = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
    let rp = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
    0.5 * (rs * rs + rp * rp)
}

fn reflect(wo: Vec3, n: Vec3) -> Vec3 {
    n * (2.0 * wo.dot(n)) - wo
}

/// Cosine-distributed direction on the hemisphere around `n`.
fn cosine_hemisphere(n: Vec3, rng: &mut Stream) -> Vec3 {
    let u1 = rng.next_f64();
    let u2 = rng.next_f64();
    let r = u1.sqrt();
    let phi = TAU * u2;
    let (t, b) = n.orthonormal_basis();
    let z = (1.0 - u1).max(0.0).sqrt();
    (t * (r * phi.cos()) + b * (r * phi.sin()) + n * z).normalized()
}

fn glossy_eval(spec: &MaterialSpec, albedo: Vec3, wi: Vec3, wo: Vec3, n: Vec3) -> Vec3 {
    let ci = wi.dot(n);
    let co = wo.dot(n);
    if ci <= 0.0 || co <= 0.0 {
        return Vec3::ZERO;
    }
    let alpha = alpha_of(spec);
    let h = (wi + wo).normalized();
    let d = ggx_d(h.dot(n), alpha);
    let g = smith_g1(ci, alpha) * smith_g1(co, alpha);
    let f = schlick(albedo, wi.dot(h));
    f * (d * g / (4.0 * ci * co))
}

/// BSDF value `f(wi, wo)` per steradian. Glass and translucent lobes are
/// transport-only and evaluate to zero; use [`sample_bsdf`] for them.
pub fn eval_bsdf(spec: &MaterialSpec, albedo: Vec3, wi: Vec3, wo: Vec3, n: Vec3) -> Result<Vec3, BsdfError> {
    check_unit("wi", wi)?;
    check_unit("wo", wo)?;
    check_unit("n", n)?;
    Ok(eval_unchecked(spec, albedo, wi, wo, n))
}

pub(crate) fn eval_unchecked(spec: &MaterialSpec, albedo: Vec3, wi: Vec3, wo: Vec3, n: Vec3) -> Vec3 {
    match spec.bsdf {
        BsdfKind::Diffuse => {
            if wi.dot(n) > 0.0 && wo.dot(n) > 0.0 {
                albedo * FRAC_1_PI
            } else {
                Vec3::ZERO
            }
        }
        BsdfKind::Glossy => glossy_eval(spec, albedo, wi, wo, n),
        BsdfKind::Glass | BsdfKind::Translucent => Vec3::ZERO,
    }
}

/// Solid-angle density with which [`sample_bsdf`] produces `wi`; zero for
/// the transport-only lobes.
pub fn pdf_bsdf(spec: &MaterialSpec, wi: Vec3, wo: Vec3, n: Vec3) -> f64 {
    match spec.bsdf {
        BsdfKind::Diffuse => {
            let c = wi.dot(n);
            if c > 0.0 {
                c * FRAC_1_PI
            } else {
                0.0
            }
        }
        BsdfKind::Glossy => {
            let co = wo.dot(n);
            if co <= 0.0 || wi.dot(n) <= 0.0 {
                return 0.0;
            }
            let alpha = alpha_of(spec);
            let h = (wi + wo).normalized();
            smith_g1(co, alpha) * ggx_d(h.dot(n), alpha) / (4.0 * co)
        }
        BsdfKind::Glass | BsdfKind::Translucent => 0.0,
    }
}

/// Visible-normal sample of the GGX distribution in the local frame (z = n).
fn sample_vndf(wo: Vec3, alpha: f64, u1: f64, u2: f64) -> Vec3 {
    let vh = Vec3::new(alpha * wo.x, alpha * wo.y, wo.z).normalized();
    let lensq = vh.x * vh.x + vh.y * vh.y;
    let t1 = if lensq > 0.0 { Vec3::new(-vh.y, vh.x, 0.0) / lensq.sqrt() } else { Vec3::X };
    let t2 = vh.cross(t1);
    let r = u1.sqrt();
    let phi = TAU * u2;
    let p1 = r * phi.cos();
    let s = 0.5 * (1.0 + vh.z);
    let p2 = (1.0 - s) * (1.0 - p1 * p1).max(0.0).sqrt() + s * r * phi.sin();
    let nh = t1 * p1 + t2 * p2 + vh * (1.0 - p1 * p1 - p2 * p2).max(0.0).sqrt();
    Vec3::new(alpha * nh.x, alpha * nh.y, nh.z.max(1e-12)).normalized()
}

/// Samples an incoming direction and its throughput weight.
pub fn sample_bsdf(spec: &MaterialSpec, albedo: Vec3, wo: Vec3, n: Vec3, rng: &mut Stream) -> (Vec3, Vec3) {
    let s = sample_bsdf_full(spec, albedo, wo, n, rng);
    (s.wi, s.weight)
}

/// [`sample_bsdf`] plus the density and delta flag needed for MIS.
pub fn sample_bsdf_full(spec: &MaterialSpec, albedo: Vec3, wo: Vec3, n: Vec3, rng: &mut Stream) -> BsdfSample {
    debug_assert!((wo.length() - 1.0).abs() < 1e-3 && (n.length() - 1.0).abs() < 1e-3);
    match spec.bsdf {
        BsdfKind::Diffuse => {
            let wi = cosine_hemisphere(n, rng);
            BsdfSample { wi, weight: albedo, pdf: wi.dot(n).max(0.0) * FRAC_1_PI, delta: false }
        }
        BsdfKind::Glossy => {
            let co = wo.dot(n);
            if co <= 0.0 {
                return BsdfSample::absorbed();
            }
            let alpha = alpha_of(spec);
            let (t, b) = n.orthonormal_basis();
            let local_wo = Vec3::new(wo.dot(t), wo.dot(b), co);
            let hl = sample_vndf(local_wo, alpha, rng.next_f64(), rng.next_f64());
            let h = (t * hl.x + b * hl.y + n * hl.z).normalized();
            let wi = reflect(wo, h);
            let ci = wi.dot(n);
            if ci <= 0.0 {
                return BsdfSample { wi, weight: Vec3::ZERO, pdf: 0.0, delta: false };
            }
            // f·cos/pdf reduces to F · G1(wi) for visible-normal sampling.
            let weight = schlick(albedo, wi.dot(h)) * smith_g1(ci, alpha);
            let pdf = smith_g1(co, alpha) * ggx_d(h.dot(n), alpha) / (4.0 * co);
            BsdfSample { wi, weight, pdf, delta: false }
        }
        BsdfKind::Glass => {
            let ior = spec.ior_or_default();
            let cos_o = wo.dot(n);
            let (nn, eta, cos_i) = if cos_o >= 0.0 { (n, 1.0 / ior, cos_o) } else { (-n, ior, -cos_o) };
            let f = fresnel_dielectric(cos_i, eta);
            let wi = if rng.next_f64() < f {
                reflect(wo, nn)
            } else {
                let sin2_t = eta * eta * (1.0 - cos_i * cos_i).max(0.0);
                let cos_t = (1.0 - sin2_t).sqrt();
                ((-wo) * eta + nn * (eta * cos_i - cos_t)).normalized()
            };
            BsdfSample { wi, weight: albedo, pdf: 0.0, delta: true }
        }
        BsdfKind::Translucent => {
            let side = if wo.dot(n) >= 0.0 { -n } else { n };
            let wi = cosine_hemisphere(side, rng);
            BsdfSample { wi, weight: albedo, pdf: 0.0, delta: true }
        }
    }
}

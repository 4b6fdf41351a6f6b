use crate::math::Vec3;

/// sRGB transfer function, linear `[0,1]` to encoded `[0,1]`.
pub fn srgb_encode(x: f64) -> f64 {
    if x <= 0.003_130_8 {
        12.92 * x
    } else {
        1.055 * x.powf(1.0 / 2.4) - 0.055
    }
}

/// Inverse of [`srgb_encode`].
pub fn srgb_decode(e: f64) -> f64 {
    if e <= 0.040_45 {
        e / 12.92
    } else {
        ((e + 0.055) / 1.055).powf(2.4)
    }
}

/// Encoded `[0,1]` value to a byte, rounding half up.
pub fn to_byte(e: f64) -> u8 {
    (e.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Exposure-scaled, clamped, sRGB-encoded 8-bit RGB (row-major, 3 bytes per
/// pixel).
pub fn tonemap(linear: &[Vec3], exposure: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(linear.len() * 3);
    for c in linear {
        for k in 0..3 {
            let v = (c[k] * exposure).clamp(0.0, 1.0);
            out.push(to_byte(srgb_encode(v)));
        }
    }
    out
}

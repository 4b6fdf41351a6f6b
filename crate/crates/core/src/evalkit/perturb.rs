use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::image::RgbImage;
use crate::renderer::{srgb_decode, srgb_encode, to_byte};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureMode {
    Overexposed,
    Underexposed,
}

impl ExposureMode {
    pub fn default_strength(self) -> f64 {
        match self {
            ExposureMode::Overexposed => 2.5,
            ExposureMode::Underexposed => 0.4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExposureMode::Overexposed => "overexposed",
            ExposureMode::Underexposed => "underexposed",
        }
    }
}

impl fmt::Display for ExposureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExposureMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "overexposed" | "over" => Ok(ExposureMode::Overexposed),
            "underexposed" | "under" => Ok(ExposureMode::Underexposed),
            other => Err(format!("unknown mode `{other}` (overexposed, underexposed)")),
        }
    }
}

/// Byte-to-byte table: sRGB decode, scale by `strength`, clamp, encode.
pub fn exposure_lut(strength: f64) -> [u8; 256] {
    let mut lut = [0u8; 256];
    for (b, out) in lut.iter_mut().enumerate() {
        let linear = srgb_decode(b as f64 / 255.0) * strength;
        *out = to_byte(srgb_encode(linear.clamp(0.0, 1.0)));
    }
    lut
}

/// Simulates an exposure change in linear light. Both modes multiply by
/// `strength`; the mode only selects which default applies upstream.
pub fn perturb_illumination(image: &RgbImage, _mode: ExposureMode, strength: f64) -> Result<RgbImage, EvalError> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(EvalError::BadStrength(strength));
    }
    let lut = exposure_lut(strength);
    Ok(RgbImage { width: image.width, height: image.height, data: image.data.iter().map(|&b| lut[b as usize]).collect() })
}

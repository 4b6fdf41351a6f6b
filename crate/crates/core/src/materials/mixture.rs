use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsdfKind {
    Diffuse,
    Glossy,
    Glass,
    Translucent,
}

impl BsdfKind {
    pub const ALL: [BsdfKind; 4] = [BsdfKind::Diffuse, BsdfKind::Glossy, BsdfKind::Glass, BsdfKind::Translucent];

    /// Whether the lobe has a finite `eval` that light sampling can use.
    pub fn has_eval(self) -> bool {
        matches!(self, BsdfKind::Diffuse | BsdfKind::Glossy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Solid,
    Checker,
    Stripes,
    PolkaDots,
    VoronoiTiles,
    FbmNoise,
    WoodRings,
    CarbonWeave,
}

impl PatternKind {
    /// Patterns available to the randomized (atypical) half of the mixture.
    pub const ATYPICAL: [PatternKind; 6] = [
        PatternKind::Checker,
        PatternKind::Stripes,
        PatternKind::PolkaDots,
        PatternKind::VoronoiTiles,
        PatternKind::FbmNoise,
        PatternKind::WoodRings,
    ];
}

/// One texture of the mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub id: u32,
    pub bsdf: BsdfKind,
    pub pattern: PatternKind,
    pub color_a: [f64; 3],
    pub color_b: [f64; 3],
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub roughness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ior: Option<f64>,
}

impl MaterialSpec {
    pub fn color_a(&self) -> Vec3 {
        Vec3::from_array(self.color_a)
    }

    pub fn color_b(&self) -> Vec3 {
        Vec3::from_array(self.color_b)
    }

    /// Plain white Lambertian, handy for tests and previews.
    pub fn diffuse(id: u32, color: [f64; 3]) -> MaterialSpec {
        MaterialSpec {
            id,
            bsdf: BsdfKind::Diffuse,
            pattern: PatternKind::Solid,
            color_a: color,
            color_b: color,
            scale: 1.0,
            roughness: None,
            ior: None,
        }
    }

    pub fn roughness_or_default(&self) -> f64 {
        self.roughness.unwrap_or(0.2)
    }

    pub fn ior_or_default(&self) -> f64 {
        self.ior.unwrap_or(1.45)
    }

    pub fn check(&self) -> Result<(), MixtureError> {
        let in_unit = |c: &[f64; 3]| c.iter().all(|v| (0.0..=1.0).contains(v));
        if !in_unit(&self.color_a) || !in_unit(&self.color_b) {
            return Err(MixtureError::Invalid(format!("material {} has a color outside [0,1]", self.id)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(MixtureError::Invalid(format!("material {} has non-positive scale", self.id)));
        }
        match (self.bsdf, self.roughness) {
            (BsdfKind::Glossy, Some(r)) if (0.0..=1.0).contains(&r) => {}
            (BsdfKind::Glossy, _) => {
                return Err(MixtureError::Invalid(format!("glossy material {} needs roughness in [0,1]", self.id)))
            }
            (_, Some(_)) => return Err(MixtureError::Invalid(format!("material {} carries a stray roughness", self.id))),
            _ => {}
        }
        match (self.bsdf, self.ior) {
            (BsdfKind::Glass, Some(i)) if i > 1.0 && i <= 3.0 => {}
            (BsdfKind::Glass, _) => return Err(MixtureError::Invalid(format!("glass material {} needs ior in (1,3]", self.id))),
            (_, Some(_)) => return Err(MixtureError::Invalid(format!("material {} carries a stray ior", self.id))),
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureMixture {
    pub entries: Vec<MaterialSpec>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixtureOptions {
    pub glossy_roughness: f64,
    pub glass_ior: f64,
    /// Share of the non-realistic entries that are solid-color shader
    /// textures (rounded up); the rest are patterned.
    pub solid_share: f64,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        MixtureOptions { glossy_roughness: 0.2, glass_ior: 1.45, solid_share: 0.5 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MixtureError {
    #[error("texture count must be at least 1")]
    ZeroCount,
    #[error("invalid mixture options: {0}")]
    Options(String),
    #[error("{0}")]
    Invalid(String),
}

/// Dark two-tone twill colours of the realistic carbon texture.
const CARBON_A: [f64; 3] = [0.035, 0.035, 0.04];
const CARBON_B: [f64; 3] = [0.12, 0.12, 0.13];

impl TextureMixture {
    pub fn get(&self, id: u32) -> Option<&MaterialSpec> {
        self.entries.get(id as usize)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn check(&self) -> Result<(), MixtureError> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.id as usize != i {
                return Err(MixtureError::Invalid(format!("entry {i} has id {}", e.id)));
            }
            e.check()?;
        }
        let carbon = self
            .entries
            .iter()
            .filter(|e| e.pattern == PatternKind::CarbonWeave && e.bsdf == BsdfKind::Diffuse)
            .count();
        if carbon != 1 {
            return Err(MixtureError::Invalid(format!("expected exactly one carbon entry, found {carbon}")));
        }
        Ok(())
    }
}

fn random_color(rng: &mut Stream) -> [f64; 3] {
    [rng.next_f64(), rng.next_f64(), rng.next_f64()]
}

pub fn build_mixture(count: usize, seed: u64) -> Result<TextureMixture, MixtureError> {
    build_mixture_with(count, seed, &MixtureOptions::default())
}

/// Creates the texture mixture: solid-colour entries with a uniformly drawn
/// BSDF kind, diffuse patterned entries, and one realistic carbon entry last.
pub fn build_mixture_with(count: usize, seed: u64, opts: &MixtureOptions) -> Result<TextureMixture, MixtureError> {
    if count == 0 {
        return Err(MixtureError::ZeroCount);
    }
    if !(0.0..=1.0).contains(&opts.glossy_roughness) {
        return Err(MixtureError::Options("glossy_roughness must be in [0,1]".into()));
    }
    if !(opts.glass_ior > 1.0 && opts.glass_ior <= 3.0) {
        return Err(MixtureError::Options("glass_ior must be in (1,3]".into()));
    }
    if !(0.0..=1.0).contains(&opts.solid_share) {
        return Err(MixtureError::Options("solid_share must be in [0,1]".into()));
    }
    let mut rng = Stream::from_parts(&[0x7E47_0001, seed, count as u64]);
    let rest = count - 1;
    let solid = ((rest as f64) * opts.solid_share).ceil() as usize;
    let solid = solid.min(rest);
    let mut entries = Vec::with_capacity(count);

    for _ in 0..solid {
        let bsdf = BsdfKind::ALL[rng.below(4) as usize];
        let color = random_color(&mut rng);
        entries.push(MaterialSpec {
            id: entries.len() as u32,
            bsdf,
            pattern: PatternKind::Solid,
            color_a: color,
            color_b: color,
            scale: 1.0,
            roughness: (bsdf == BsdfKind::Glossy).then_some(opts.glossy_roughness),
            ior: (bsdf == BsdfKind::Glass).then_some(opts.glass_ior),
        });
    }
    for _ in solid..rest {
        let pattern = PatternKind::ATYPICAL[rng.below(PatternKind::ATYPICAL.len() as u64) as usize];
        let color_a = random_color(&mut rng);
        let color_b = random_color(&mut rng);
        let scale = rng.range_inclusive(2, 12) as f64;
        entries.push(MaterialSpec {
            id: entries.len() as u32,
            bsdf: BsdfKind::Diffuse,
            pattern,
            color_a,
            color_b,
            scale,
            roughness: None,
            ior: None,
        });
    }
    entries.push(MaterialSpec {
        id: entries.len() as u32,
        bsdf: BsdfKind::Diffuse,
        pattern: PatternKind::CarbonWeave,
        color_a: CARBON_A,
        color_b: CARBON_B,
        scale: 24.0,
        roughness: None,
        ior: None,
    });
    let mixture = TextureMixture { entries, seed };
    mixture.check()?;
    Ok(mixture)
}

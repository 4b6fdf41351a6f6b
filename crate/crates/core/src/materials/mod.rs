//! Texture randomization: BSDF kinds, procedural patterns, and the per-dataset
//! texture mixture.

mod bsdf;
mod mixture;
mod pattern;

pub use bsdf::{eval_bsdf, pdf_bsdf, sample_bsdf, sample_bsdf_full, BsdfError, BsdfSample};
pub use mixture::{build_mixture, build_mixture_with, BsdfKind, MaterialSpec, MixtureError, MixtureOptions, PatternKind, TextureMixture};
pub use pattern::sample_pattern;

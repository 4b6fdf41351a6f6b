//! Equirectangular HDR environment lighting: maps, the Radiance `.hdr`
//! codec, procedural skies and luminance importance sampling.

mod envmap;
mod hdr;
mod sampler;
mod sky;

pub use envmap::{dir_to_uv, lookup, uv_to_dir, EnvError, EnvMap};
pub use hdr::{decode_hdr, encode_hdr, load_hdr, save_hdr, HdrError};
pub use sampler::{sample_env, EnvSample, EnvSampler};
pub use sky::{synthesize_sky, SkyCondition, SkyError};

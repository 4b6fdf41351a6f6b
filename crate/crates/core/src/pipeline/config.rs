//! Dataset configuration: one JSON document, every field defaulted.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::environment::{load_hdr, synthesize_sky, EnvMap, EnvSampler, SkyCondition};
use crate::materials::MixtureOptions;
use crate::math::Aabb;
use crate::renderer::RenderConfig;
use crate::sampler::ParamRanges;
use crate::scene::{generate_uav_mesh, load_obj, Mesh, UavParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Requested image count; rounded up to the nearest achievable total.
    pub target_images: u64,
    /// Size of the texture mixture.
    pub textures: u32,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection { target_images: 32_000, textures: 32 }
    }
}

fn default_model_seed() -> u64 {
    7
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    /// Generated multirotor.
    Parametric {
        name: String,
        #[serde(default)]
        params: UavParams,
        #[serde(default = "default_model_seed")]
        seed: u64,
    },
    /// Wavefront OBJ; relative paths resolve against the config file.
    Obj {
        name: String,
        path: PathBuf,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

impl ModelSource {
    pub fn name(&self) -> &str {
        match self {
            ModelSource::Parametric { name, .. } | ModelSource::Obj { name, .. } => name,
        }
    }
}

fn default_sky_width() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSource {
    /// Procedural sky.
    Sky {
        name: String,
        condition: SkyCondition,
        sun_azimuth: f64,
        sun_elevation: f64,
        #[serde(default = "default_sky_width")]
        width: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Radiance `.hdr` file; relative paths resolve against the config file.
    Hdr { name: String, path: PathBuf },
}

impl EnvironmentSource {
    pub fn name(&self) -> &str {
        match self {
            EnvironmentSource::Sky { name, .. } | EnvironmentSource::Hdr { name, .. } => name,
        }
    }
}

/// The ten shipped skies: five conditions, two sun placements each.
pub fn builtin_environments() -> Vec<EnvironmentSource> {
    let geometry = [
        (SkyCondition::ClearDay, [(135.0, 55.0), (300.0, 30.0)]),
        (SkyCondition::PartlyCloudy, [(60.0, 45.0), (220.0, 25.0)]),
        (SkyCondition::Overcast, [(0.0, 50.0), (180.0, 35.0)]),
        (SkyCondition::Twilight, [(90.0, -4.0), (270.0, -2.0)]),
        (SkyCondition::DuskWarm, [(250.0, 6.0), (100.0, 10.0)]),
    ];
    let mut out = Vec::new();
    for (condition, suns) in geometry {
        for (i, (az, el)) in suns.into_iter().enumerate() {
            out.push(EnvironmentSource::Sky {
                name: format!("{}_{}", condition.name(), ['a', 'b'][i]),
                condition,
                sun_azimuth: az,
                sun_elevation: el,
                width: default_sky_width(),
                seed: i as u64 + 1,
            });
        }
    }
    out
}

pub fn builtin_models() -> Vec<ModelSource> {
    vec![ModelSource::Parametric { name: "eagle".into(), params: UavParams::default(), seed: default_model_seed() }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSection {
    pub horizontal_fov: f64,
}

impl Default for CameraSection {
    fn default() -> Self {
        CameraSection { horizontal_fov: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSection {
    pub spp: u32,
    pub max_depth: u32,
    pub width: u32,
    pub height: u32,
    pub exposure: f64,
    /// Also write linear `linear/NNNNNN.pfm` images.
    pub write_pfm: bool,
}

impl Default for RenderSection {
    fn default() -> Self {
        let r = RenderConfig::default();
        RenderSection {
            spp: r.spp,
            max_depth: r.max_depth,
            width: r.width,
            height: r.height,
            exposure: r.exposure,
            write_pfm: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub dataset: DatasetSection,
    pub models: Vec<ModelSource>,
    pub environments: Vec<EnvironmentSource>,
    pub ranges: ParamRanges,
    pub camera: CameraSection,
    pub render: RenderSection,
    pub mixture: MixtureOptions,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            dataset: DatasetSection::default(),
            models: builtin_models(),
            environments: builtin_environments(),
            ranges: ParamRanges::default(),
            camera: CameraSection::default(),
            render: RenderSection::default(),
            mixture: MixtureOptions::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads a config file; parse errors carry `path:line:column`.
    pub fn load(path: &Path) -> Result<(Config, PathBuf), PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
        let cfg = Config::from_json(&text).map_err(|e| {
            PipelineError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn render_config(&self, image_id: u64) -> RenderConfig {
        RenderConfig {
            spp: self.render.spp,
            max_depth: self.render.max_depth,
            width: self.render.width,
            height: self.render.height,
            exposure: self.render.exposure,
            seed: self.seed,
            image_id,
        }
    }

    /// Canonical JSON: defaults filled in, object keys sorted.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of [`Config::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        if self.environments.is_empty() {
            return bad("at least one environment is required".into());
        }
        let mut names = std::collections::HashSet::new();
        for n in self.models.iter().map(ModelSource::name) {
            if !names.insert(n) {
                return bad(format!("duplicate model name `{n}`"));
            }
        }
        names.clear();
        for n in self.environments.iter().map(EnvironmentSource::name) {
            if !names.insert(n) {
                return bad(format!("duplicate environment name `{n}`"));
            }
        }
        if self.render.width < 16 || self.render.height < 16 {
            return bad("render size must be at least 16x16".into());
        }
        if !(self.camera.horizontal_fov > 0.0 && self.camera.horizontal_fov < 180.0) {
            return bad("camera.horizontal_fov must lie in (0, 180)".into());
        }
        self.render_config(0).check().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.ranges.check().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Model mesh centered on its AABB.
pub fn build_model(src: &ModelSource, base: &Path) -> Result<Mesh, PipelineError> {
    let mesh = match src {
        ModelSource::Parametric { params, seed, .. } => {
            generate_uav_mesh(params, *seed).map_err(|e| PipelineError::Asset(format!("model `{}`: {e}", src.name())))?
        }
        ModelSource::Obj { path, scale, .. } => {
            if !(*scale > 0.0 && scale.is_finite()) {
                return Err(PipelineError::Asset(format!("model `{}`: scale must be positive", src.name())));
            }
            let m = load_obj(resolve(base, path)).map_err(|e| PipelineError::Asset(format!("model `{}`: {e}", src.name())))?;
            let mut m = m.centered();
            for v in &mut m.vertices {
                *v *= *scale;
            }
            m
        }
    };
    let mut m = mesh.centered();
    m.material_slot = src.name().to_string();
    Ok(m)
}

pub fn build_environment(src: &EnvironmentSource, base: &Path) -> Result<EnvMap, PipelineError> {
    let asset = |e: String| PipelineError::Asset(format!("environment `{}`: {e}", src.name()));
    let mut map = match src {
        EnvironmentSource::Sky { condition, sun_azimuth, sun_elevation, width, seed, .. } => {
            synthesize_sky(*condition, *sun_azimuth, *sun_elevation, *width, *seed).map_err(|e| asset(e.to_string()))?
        }
        EnvironmentSource::Hdr { path, .. } => load_hdr(resolve(base, path)).map_err(|e| asset(e.to_string()))?,
    };
    map.name = src.name().to_string();
    Ok(map)
}

/// Every model mesh and environment sampler of a config, in config order.
pub struct Assets {
    pub models: Vec<Mesh>,
    pub model_bounds: Vec<Aabb>,
    pub environments: Vec<Arc<EnvSampler>>,
}

pub fn build_assets(cfg: &Config, base: &Path) -> Result<Assets, PipelineError> {
    let models = cfg.models.iter().map(|m| build_model(m, base)).collect::<Result<Vec<_>, _>>()?;
    let model_bounds = models.iter().map(Mesh::aabb).collect();
    let environments = cfg
        .environments
        .iter()
        .map(|e| {
            let map = build_environment(e, base)?;
            EnvSampler::new(Arc::new(map))
                .map(Arc::new)
                .map_err(|err| PipelineError::Asset(format!("environment `{}`: {err}", e.name())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Assets { models, model_bounds, environments })
}

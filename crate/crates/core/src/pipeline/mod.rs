//! End-to-end dataset generation: config, plan, render, label, manifest.

mod config;
mod manifest;
mod validate;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{debug, info};
use rayon::prelude::*;
use thiserror::Error;

pub use config::{
    build_assets, build_environment, build_model, builtin_environments, builtin_models, Assets, CameraSection, Config,
    DatasetSection, EnvironmentSource, ModelSource, RenderSection,
};
pub use manifest::{plan_summary, write_atomic, ImageRecord, Manifest, ANNOTATIONS_FILE, MANIFEST_FILE, TOOL_NAME};
pub use validate::{validate, ValidationReport, Violation};

use crate::image::{write_pfm, ImageError, RgbImage};
use crate::labeler::{annotate, write_coco, write_yolo, CocoImage, LabelError};
use crate::materials::{build_mixture_with, MixtureError, TextureMixture};
use crate::renderer::{render, tonemap, RenderError, Scene, SceneObject};
use crate::sampler::{draw_samples, make_plan, DatasetPlan, PlacementGeometry, SamplerError, SceneSample};

/// Images rendered per parallel batch.
pub const CHUNK_SIZE: usize = 64;
/// Minimum time between manifest checkpoints during a run.
pub const CHECKPOINT_INTERVAL: Duration = Duration::from_secs(10);

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Asset(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("output directory holds a dataset from a different config (hash {found}, expected {expected})")]
    HashMismatch { found: String, expected: String },
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    /// Rayon worker threads; does not affect output bytes.
    pub workers: usize,
    /// Stop after rendering this many new images (the run is then incomplete).
    pub max_images: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub manifest: Manifest,
    pub rendered: u64,
    /// Images reused from a previous run.
    pub skipped: u64,
    /// True when `max_images` stopped the run early.
    pub interrupted: bool,
}

/// Everything derived from a config before any pixel is rendered.
pub struct Prepared {
    pub config: Config,
    pub config_hash: String,
    pub assets: Assets,
    pub mixture: TextureMixture,
    pub plan: DatasetPlan,
    pub geometry: PlacementGeometry,
    pub samples: Vec<SceneSample>,
}

/// Validates the config, builds assets and draws every sample.
pub fn prepare(config: &Config, base_dir: &Path) -> Result<Prepared, PipelineError> {
    config.check()?;
    let assets = build_assets(config, base_dir)?;
    let mixture = build_mixture_with(config.dataset.textures as usize, config.seed, &config.mixture)?;
    let models: Vec<String> = config.models.iter().map(|m| m.name().to_string()).collect();
    let envs: Vec<String> = config.environments.iter().map(|e| e.name().to_string()).collect();
    let plan = make_plan(&models, &envs, config.dataset.textures, config.dataset.target_images, &config.ranges, config.seed)?;
    let geometry = PlacementGeometry {
        horizontal_fov: config.camera.horizontal_fov,
        width: config.render.width,
        height: config.render.height,
        model_bounds: assets.model_bounds.clone(),
    };
    let samples = draw_samples(&plan, &geometry)?;
    Ok(Prepared { config: config.clone(), config_hash: config.hash(), assets, mixture, plan, geometry, samples })
}

pub fn image_file(image_id: u64) -> String {
    format!("images/{image_id:06}.png")
}

pub fn label_file(image_id: u64) -> String {
    format!("labels/{image_id:06}.txt")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Renders and labels one sample, writing its image and label files.
pub fn render_sample(p: &Prepared, sample: &SceneSample, out_dir: &Path) -> Result<ImageRecord, PipelineError> {
    let model_index = p.plan.models.iter().position(|m| *m == sample.model).expect("sample model in plan");
    let env_index = p.plan.environments.iter().position(|e| *e == sample.environment).expect("sample environment in plan");
    let model = &p.assets.models[model_index];
    let material = p.mixture.get(sample.material).expect("sample material in mixture").clone();
    let camera = sample.camera(&p.geometry)?;
    let objects = sample
        .placements
        .iter()
        .enumerate()
        .map(|(i, xf)| SceneObject { mesh: model.transformed(xf), material: material.clone(), instance_id: i as u32 })
        .collect();
    let scene = Scene::new(camera, p.assets.environments[env_index].clone(), objects)?;
    let rc = p.config.render_config(sample.image_id);
    let out = render(&scene, &rc)?;
    let img = RgbImage::new(rc.width, rc.height, tonemap(&out.color, rc.exposure))?;
    let image_file = image_file(sample.image_id);
    img.write_png(out_dir.join(&image_file))?;
    if p.config.render.write_pfm {
        write_pfm(out_dir.join(format!("linear/{:06}.pfm", sample.image_id)), rc.width, rc.height, &out.color)?;
    }
    let labels = annotate(sample, &scene.camera, model);
    let label_file = label_file(sample.image_id);
    let text = write_yolo(&labels.annotations, rc.width, rc.height)?;
    let path = out_dir.join(&label_file);
    std::fs::write(&path, text).map_err(io_err(&path))?;
    debug!("image {} done: {} label(s)", sample.image_id, labels.annotations.len());
    Ok(ImageRecord {
        sample: sample.clone(),
        image_file,
        label_file,
        annotation_count: labels.annotations.len(),
        annotations: labels.annotations,
        dropped: labels.dropped,
    })
}

fn manifest_for(p: &Prepared, records: Vec<ImageRecord>, complete: bool) -> Manifest {
    Manifest {
        tool: TOOL_NAME.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: p.config_hash.clone(),
        seed: p.config.seed,
        width: p.config.render.width,
        height: p.config.render.height,
        plan_summary: plan_summary(&p.plan),
        plan: p.plan.clone(),
        mixture: p.mixture.clone(),
        records,
        complete,
    }
}

/// Records of a previous run that still match their sample and whose files
/// exist; anything else is rendered again.
fn reusable(p: &Prepared, out_dir: &Path) -> Result<HashMap<u64, ImageRecord>, PipelineError> {
    let path = out_dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(HashMap::new());
    }
    let old = Manifest::load(&path)?;
    if old.config_hash != p.config_hash {
        return Err(PipelineError::HashMismatch { found: old.config_hash, expected: p.config_hash.clone() });
    }
    Ok(old
        .records
        .into_iter()
        .filter(|r| {
            p.samples.get(r.sample.image_id as usize) == Some(&r.sample)
                && out_dir.join(&r.image_file).is_file()
                && out_dir.join(&r.label_file).is_file()
        })
        .map(|r| (r.sample.image_id, r))
        .collect())
}

/// Generates (or resumes) a dataset in `opts.output_dir`.
pub fn run(config: &Config, base_dir: &Path, opts: &RunOptions) -> Result<RunReport, PipelineError> {
    let p = prepare(config, base_dir)?;
    info!("{}", plan_summary(&p.plan));
    run_prepared(&p, opts)
}

pub fn run_prepared(p: &Prepared, opts: &RunOptions) -> Result<RunReport, PipelineError> {
    let out = &opts.output_dir;
    let mut dirs = vec![out.join("images"), out.join("labels")];
    if p.config.render.write_pfm {
        dirs.push(out.join("linear"));
    }
    for d in &dirs {
        std::fs::create_dir_all(d).map_err(io_err(d))?;
    }
    let mut done = reusable(p, out)?;
    let skipped = done.len() as u64;
    if skipped > 0 {
        info!("resuming: {skipped} image(s) already present");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;

    let todo: Vec<&SceneSample> = p.samples.iter().filter(|s| !done.contains_key(&s.image_id)).collect();
    let budget = opts.max_images.map_or(todo.len(), |m| todo.len().min(m as usize));
    let interrupted = budget < todo.len();
    let mut rendered = 0u64;
    let manifest_path = out.join(MANIFEST_FILE);
    let sorted = |done: &HashMap<u64, ImageRecord>| {
        let mut r: Vec<ImageRecord> = done.values().cloned().collect();
        r.sort_by_key(|r| r.sample.image_id);
        r
    };
    let mut last_flush = Instant::now();
    for chunk in todo[..budget].chunks(CHUNK_SIZE) {
        let records: Vec<ImageRecord> =
            pool.install(|| chunk.par_iter().map(|s| render_sample(p, s, out)).collect::<Result<_, _>>())?;
        rendered += records.len() as u64;
        for r in records {
            done.insert(r.sample.image_id, r);
        }
        if last_flush.elapsed() >= CHECKPOINT_INTERVAL {
            write_atomic(&manifest_path, manifest_for(p, sorted(&done), false).to_json().as_bytes())?;
            last_flush = Instant::now();
        }
        info!("{}/{} images", done.len(), p.samples.len());
    }

    let records = sorted(&done);
    let complete = records.len() == p.samples.len();
    if complete {
        let images: Vec<CocoImage> = records
            .iter()
            .map(|r| CocoImage {
                id: r.sample.image_id,
                file_name: r.image_file.clone(),
                width: p.config.render.width,
                height: p.config.render.height,
            })
            .collect();
        let anns: Vec<_> = records.iter().flat_map(|r| r.annotations.iter().copied()).collect();
        let doc = write_coco(&anns, &images)?;
        write_atomic(&out.join(ANNOTATIONS_FILE), doc.to_json().as_bytes())?;
    }
    let manifest = manifest_for(p, records, complete);
    write_atomic(&manifest_path, manifest.to_json().as_bytes())?;
    Ok(RunReport { manifest, rendered, skipped, interrupted })
}

//! The `airforge` command line.

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::warn;

use crate::environment::save_hdr;
use crate::evalkit::{
    cluster_anchors, curve_csv, ground_truth_from_coco, load_detections, mean_average_precision, perturb_illumination,
    unknown_image_count, AnchorDistance, ExposureMode,
};
use crate::image::RgbImage;
use crate::labeler::{parse_coco, parse_yolo};
use crate::pipeline::{
    build_environment, build_model, plan_summary, prepare, run_prepared, validate, Config, EnvironmentSource,
    ModelSource, RunOptions,
};
use crate::scene::write_obj;

#[derive(Debug, Parser)]
#[command(name = "airforge", version, about = "Synthetic aerial UAV dataset generator and detection toolkit")]
pub struct Cli {
    /// Master seed; overrides the config file seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Increase log detail (-v info, -vv debug, -vvv trace)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render and label a dataset
    Generate(GenerateArgs),
    /// Write the built-in models (OBJ) and environments (HDR) to disk
    Assets(AssetsArgs),
    /// Check a generated dataset for consistency
    Validate(ValidateArgs),
    /// Compute AP and mAP of detections against COCO ground truth
    Eval(EvalArgs),
    /// Cluster label box sizes into anchor boxes
    Anchors(AnchorsArgs),
    /// Write over- or underexposed copies of PNG images
    Perturb(PerturbArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Config file (JSON); built-in defaults when omitted
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(short, long, default_value = "dataset")]
    pub output: PathBuf,
    /// Worker threads
    #[arg(short, long, env = "AIRFORGE_THREADS", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Requested image count [default: from config]
    #[arg(long)]
    pub target_images: Option<u64>,
    /// Texture mixture size [default: from config]
    #[arg(long)]
    pub textures: Option<u32>,
    /// Samples per pixel [default: from config]
    #[arg(long)]
    pub spp: Option<u32>,
    /// Render width and height in pixels [default: from config]
    #[arg(long)]
    pub size: Option<u32>,
    /// Stop after this many new images; rerun to resume [default: no limit]
    #[arg(long)]
    pub max_images: Option<u64>,
    /// Print the plan and exit without rendering
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct AssetsArgs {
    /// Config whose models and environments are written; built-in pack when omitted
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(short, long, default_value = "assets")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Dataset directory
    pub dataset: PathBuf,
    /// Write the JSON report here [default: not written]
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground truth COCO annotations
    #[arg(long)]
    pub gt: PathBuf,
    /// Detections: COCO results JSON or `image_id class conf x0 y0 x1 y1` text
    #[arg(long)]
    pub detections: PathBuf,
    /// Minimum IoU for a true positive
    #[arg(long, default_value_t = 0.5)]
    pub iou_threshold: f64,
    /// JSON report path
    #[arg(long, default_value = "eval_report.json")]
    pub report: PathBuf,
    /// Also write precision-recall points as CSV [default: not written]
    #[arg(long)]
    pub curve_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnchorsArgs {
    /// Directory of YOLO label files, or a COCO annotations file
    pub labels: PathBuf,
    /// Number of anchors
    #[arg(short, default_value_t = 9)]
    pub k: usize,
    /// Clustering distance (iou, euclidean)
    #[arg(long, default_value = "iou")]
    pub distance: AnchorDistance,
    /// Network input size the scaled anchors refer to
    #[arg(long, default_value_t = 608)]
    pub grid: u32,
    /// Write the JSON report here [default: not written]
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// PNG file or directory of PNG files
    pub input: PathBuf,
    /// Exposure mode (overexposed, underexposed)
    #[arg(long, default_value = "overexposed")]
    pub mode: ExposureMode,
    /// Linear-light gain [default: 2.5 overexposed, 0.4 underexposed]
    #[arg(long)]
    pub strength: Option<f64>,
    /// Output directory [default: next to each input]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {}", error_chain(&e));
            1
        }
    }
}

/// Joins an error's causes, skipping those its message already repeats.
fn error_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

/// `Ok(false)` means the command ran but found problems.
fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(cli.seed, a),
        Command::Assets(a) => cmd_assets(cli.seed, a),
        Command::Validate(a) => cmd_validate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Anchors(a) => cmd_anchors(cli.seed.unwrap_or(0), a),
        Command::Perturb(a) => cmd_perturb(a),
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<(Config, PathBuf)> {
    let (mut cfg, base) = match path {
        Some(p) => Config::load(p)?,
        None => (Config::default(), PathBuf::from(".")),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok((cfg, base))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_generate(seed: Option<u64>, a: &GenerateArgs) -> Result<bool> {
    let (mut cfg, base) = load_config(a.config.as_deref(), seed)?;
    if let Some(n) = a.target_images {
        cfg.dataset.target_images = n;
    }
    if let Some(n) = a.textures {
        cfg.dataset.textures = n;
    }
    if let Some(n) = a.spp {
        cfg.render.spp = n;
    }
    if let Some(n) = a.size {
        cfg.render.width = n;
        cfg.render.height = n;
    }
    let prepared = prepare(&cfg, &base)?;
    println!("plan: {}", plan_summary(&prepared.plan));
    if a.dry_run {
        return Ok(true);
    }
    let opts = RunOptions { output_dir: a.output.clone(), workers: a.workers as usize, max_images: a.max_images };
    let r = run_prepared(&prepared, &opts)?;
    let labels: usize = r.manifest.records.iter().map(|r| r.annotation_count).sum();
    println!(
        "rendered {} image(s), reused {}, {} of {} done, {labels} label(s) in {}",
        r.rendered,
        r.skipped,
        r.manifest.records.len(),
        prepared.plan.target_images,
        a.output.display()
    );
    if r.interrupted {
        println!("stopped early; rerun the same command to resume");
    }
    Ok(true)
}

fn cmd_assets(seed: Option<u64>, a: &AssetsArgs) -> Result<bool> {
    let (cfg, base) = load_config(a.config.as_deref(), seed)?;
    let (models_dir, env_dir) = (a.output.join("models"), a.output.join("environments"));
    for d in [&models_dir, &env_dir] {
        std::fs::create_dir_all(d).with_context(|| format!("cannot create {}", d.display()))?;
    }
    let mut out = cfg.clone();
    for (src, slot) in cfg.models.iter().zip(out.models.iter_mut()) {
        let mesh = build_model(src, &base)?;
        let file = format!("{}.obj", src.name());
        let path = models_dir.join(&file);
        std::fs::write(&path, write_obj(&mesh)).with_context(|| format!("cannot write {}", path.display()))?;
        println!("{}: {} triangles", path.display(), mesh.triangle_count());
        *slot = ModelSource::Obj { name: src.name().to_string(), path: PathBuf::from("models").join(file), scale: 1.0 };
    }
    for (src, slot) in cfg.environments.iter().zip(out.environments.iter_mut()) {
        let map = build_environment(src, &base)?;
        let file = format!("{}.hdr", src.name());
        let path = env_dir.join(&file);
        save_hdr(&map, &path).with_context(|| format!("cannot write {}", path.display()))?;
        println!("{}: {}x{}", path.display(), map.width, map.height);
        *slot = EnvironmentSource::Hdr { name: src.name().to_string(), path: PathBuf::from("environments").join(file) };
    }
    let cfg_path = a.output.join("config.json");
    write_json(&cfg_path, &out)?;
    println!("{}: config using these files", cfg_path.display());
    Ok(true)
}

fn cmd_validate(a: &ValidateArgs) -> Result<bool> {
    let report = validate(&a.dataset)?;
    for v in &report.violations {
        println!("{}: {}", v.file, v.message);
    }
    println!(
        "{} image(s), {} annotation(s), {} violation(s)",
        report.images,
        report.annotations,
        report.violations.len()
    );
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    Ok(report.is_valid())
}

fn cmd_eval(a: &EvalArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&a.gt).with_context(|| format!("cannot read {}", a.gt.display()))?;
    let doc = parse_coco(&text).with_context(|| format!("in {}", a.gt.display()))?;
    let gt = ground_truth_from_coco(&doc);
    let dets = load_detections(&a.detections)?;
    let known: HashSet<u64> = doc.images.iter().map(|i| i.id).collect();
    let unknown = unknown_image_count(&dets, &known);
    if unknown > 0 {
        warn!("{unknown} detection(s) reference unknown image ids; they count as false positives");
    }
    let result = mean_average_precision(&dets, &gt, a.iou_threshold)?;
    for c in &result.classes {
        let r = &c.result;
        println!("class {}: AP {:.3}  TP {}  FP {}  FN {}  GT {}", c.class_id, r.ap, r.tp, r.fp, r.fn_, r.num_gt);
    }
    println!("mAP@{:.2} = {:.3}", a.iou_threshold, result.map);
    let report = serde_json::json!({
        "detections": dets.len(),
        "unknown_image_detections": unknown,
        "result": result,
    });
    write_json(&a.report, &report)?;
    if let Some(p) = &a.curve_csv {
        std::fs::write(p, curve_csv(&result.classes)).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(true)
}

/// Normalized `(w, h)` of every label box.
fn label_sizes(path: &Path) -> Result<Vec<(f64, f64)>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .with_context(|| format!("cannot read {}", path.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        files.sort();
        let mut out = Vec::new();
        for f in files {
            let text = std::fs::read_to_string(&f).with_context(|| format!("cannot read {}", f.display()))?;
            let boxes = parse_yolo(&text).with_context(|| format!("in {}", f.display()))?;
            out.extend(boxes.iter().map(|b| (b.w, b.h)));
        }
        Ok(out)
    } else {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let doc = parse_coco(&text).with_context(|| format!("in {}", path.display()))?;
        let sizes: std::collections::HashMap<u64, (f64, f64)> =
            doc.images.iter().map(|i| (i.id, (i.width as f64, i.height as f64))).collect();
        Ok(doc.annotations.iter().map(|a| (a.bbox[2] / sizes[&a.image_id].0, a.bbox[3] / sizes[&a.image_id].1)).collect())
    }
}

fn cmd_anchors(seed: u64, a: &AnchorsArgs) -> Result<bool> {
    let boxes = label_sizes(&a.labels)?;
    let set = cluster_anchors(&boxes, a.k, a.distance, seed)?;
    let g = a.grid as f64;
    println!("{} anchors from {} boxes ({} iterations)", a.k, boxes.len(), set.iterations);
    let sorted = set.sorted_by_area();
    for (w, h) in &sorted {
        println!("{w:.6},{h:.6}  {:.1},{:.1}", w * g, h * g);
    }
    if let Some(p) = &a.report {
        let scaled: Vec<(f64, f64)> = sorted.iter().map(|(w, h)| (w * g, h * g)).collect();
        let report = serde_json::json!({
            "k": a.k,
            "distance": a.distance,
            "seed": seed,
            "boxes": boxes.len(),
            "anchors": sorted,
            "grid": a.grid,
            "scaled": scaled,
            "objective": set.objective,
            "iterations": set.iterations,
        });
        write_json(p, &report)?;
    }
    Ok(true)
}

fn is_perturbed(p: &Path) -> bool {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
    [ExposureMode::Overexposed, ExposureMode::Underexposed].iter().any(|m| name.ends_with(&format!(".{m}.png")))
}

fn cmd_perturb(a: &PerturbArgs) -> Result<bool> {
    let strength = a.strength.unwrap_or(a.mode.default_strength());
    let inputs: Vec<PathBuf> = if a.input.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(&a.input)
            .with_context(|| format!("cannot read {}", a.input.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "png") && !is_perturbed(p))
            .collect();
        v.sort();
        v
    } else if a.input.is_file() {
        vec![a.input.clone()]
    } else {
        bail!("{} does not exist", a.input.display());
    };
    if let Some(d) = &a.output {
        std::fs::create_dir_all(d).with_context(|| format!("cannot create {}", d.display()))?;
    }
    for p in &inputs {
        let img = RgbImage::read_png(p)?;
        let out = perturb_illumination(&img, a.mode, strength)?;
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        let dir = a.output.clone().unwrap_or_else(|| p.parent().map(Path::to_path_buf).unwrap_or_default());
        out.write_png(dir.join(format!("{stem}.{}.png", a.mode)))?;
    }
    println!("wrote {} {} image(s) at strength {strength}", inputs.len(), a.mode);
    Ok(true)
}

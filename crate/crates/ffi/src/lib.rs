//! C ABI for the airforge engine.
//!
//! Every fallible call returns an [`AfStatus`]; on failure a message is
//! available from [`af_last_error_message`] on the same thread. Meshes and
//! environment maps are opaque handles returned through out-pointers and
//! released with the matching `af_*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;
use std::sync::Arc;

use airforge::environment::{load_hdr, lookup, save_hdr, synthesize_sky, EnvMap, SkyCondition};
use airforge::evalkit::{self, AnchorDistance, DetectionRecord, ExposureMode, GroundTruth};
use airforge::image::RgbImage;
use airforge::math::Vec3;
use airforge::pipeline::{self, Config, RunOptions};
use airforge::scene::{generate_uav_mesh, load_obj, write_obj, BBox2D, Mesh, UavParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Failed = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfSkyCondition {
    ClearDay = 0,
    PartlyCloudy = 1,
    Overcast = 2,
    Twilight = 3,
    DuskWarm = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfAnchorDistance {
    Iou = 0,
    Euclidean = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfExposureMode {
    Overexposed = 0,
    Underexposed = 1,
}

/// Axis-aligned pixel box, `x_min < x_max`, `y_min < y_max`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfDetection {
    pub image_id: u64,
    pub class_id: u32,
    pub bbox: AfBox,
    pub confidence: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfGroundTruth {
    pub image_id: u64,
    pub class_id: u32,
    pub bbox: AfBox,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AfApResult {
    pub ap: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub num_gt: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfUavParams {
    pub arms: u32,
    pub arm_length: f64,
    pub body_radius: f64,
    pub rotor_radius: f64,
    pub gear_height: f64,
}

/// Triangle mesh handle.
pub struct AfMesh {
    mesh: Mesh,
}

/// Equirectangular environment map handle.
pub struct AfEnvMap {
    map: Arc<EnvMap>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(AfStatus, String);

type FfiResult = Result<(), Failure>;

fn fail<T>(status: AfStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, recording its error message and converting panics.
fn guard(f: impl FnOnce() -> FfiResult) -> AfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AfStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AfStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        fail(AfStatus::NullPointer, format!("{name} is null"))
    } else {
        Ok(())
    }
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    non_null(p, name)?;
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => fail(AfStatus::InvalidArgument, format!("{name} is not UTF-8")),
    }
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, n))
}

fn to_bbox(b: &AfBox) -> BBox2D {
    BBox2D { x_min: b.x_min, y_min: b.y_min, x_max: b.x_max, y_max: b.y_max }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next `af_*` call on the same thread.
#[no_mangle]
pub extern "C" fn af_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn af_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn af_uav_params_default() -> AfUavParams {
    let p = UavParams::default();
    AfUavParams {
        arms: p.arms,
        arm_length: p.arm_length,
        body_radius: p.body_radius,
        rotor_radius: p.rotor_radius,
        gear_height: p.gear_height,
    }
}

/// Generates a multirotor mesh into `*out`.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn af_mesh_generate_uav(params: *const AfUavParams, seed: u64, out: *mut *mut AfMesh) -> AfStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        let p = &*params;
        let params = UavParams {
            arms: p.arms,
            arm_length: p.arm_length,
            body_radius: p.body_radius,
            rotor_radius: p.rotor_radius,
            gear_height: p.gear_height,
        };
        let mesh = generate_uav_mesh(&params, seed).or_else(|e| fail(AfStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(AfMesh { mesh }));
        Ok(())
    })
}

/// Loads a Wavefront OBJ file into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn af_mesh_load_obj(path: *const c_char, out: *mut *mut AfMesh) -> AfStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        non_null(out, "out")?;
        let mesh = load_obj(&path).or_else(|e| fail(AfStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(AfMesh { mesh }));
        Ok(())
    })
}

/// Writes `mesh` as a Wavefront OBJ file.
///
/// # Safety
/// `mesh` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn af_mesh_write_obj(mesh: *const AfMesh, path: *const c_char) -> AfStatus {
    guard(|| {
        non_null(mesh, "mesh")?;
        let path = path_arg(path, "path")?;
        std::fs::write(&path, write_obj(&(*mesh).mesh))
            .or_else(|e| fail(AfStatus::Io, format!("{}: {e}", path.display())))
    })
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn af_mesh_vertex_count(mesh: *const AfMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.vertex_count())
}

/// Triangle count, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn af_mesh_triangle_count(mesh: *const AfMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.triangle_count())
}

/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn af_mesh_free(mesh: *mut AfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Synthesizes a procedural sky into `*out`. `width` must be even and ≥ 64.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn af_envmap_synthesize(
    condition: AfSkyCondition,
    sun_azimuth: f64,
    sun_elevation: f64,
    width: usize,
    seed: u64,
    out: *mut *mut AfEnvMap,
) -> AfStatus {
    guard(|| {
        non_null(out, "out")?;
        let condition = SkyCondition::ALL[condition as usize];
        let map = synthesize_sky(condition, sun_azimuth, sun_elevation, width, seed)
            .or_else(|e| fail(AfStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(AfEnvMap { map: Arc::new(map) }));
        Ok(())
    })
}

/// Loads a Radiance `.hdr` file into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn af_envmap_load_hdr(path: *const c_char, out: *mut *mut AfEnvMap) -> AfStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        non_null(out, "out")?;
        let map = load_hdr(&path).or_else(|e| fail(AfStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(AfEnvMap { map: Arc::new(map) }));
        Ok(())
    })
}

/// Writes `map` as a Radiance `.hdr` file.
///
/// # Safety
/// `map` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn af_envmap_save_hdr(map: *const AfEnvMap, path: *const c_char) -> AfStatus {
    guard(|| {
        non_null(map, "map")?;
        let path = path_arg(path, "path")?;
        save_hdr(&(*map).map, &path).or_else(|e| fail(AfStatus::Io, e.to_string()))
    })
}

/// Map size in texels.
///
/// # Safety
/// `map` must be a live handle; `width` and `height` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn af_envmap_size(map: *const AfEnvMap, width: *mut usize, height: *mut usize) -> AfStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(width, "width")?;
        non_null(height, "height")?;
        let m = &*map;
        *width = m.map.width;
        *height = m.map.height;
        Ok(())
    })
}

/// Bilinear radiance seen along world direction `(x, y, z)` into `rgb[3]`.
///
/// # Safety
/// `map` must be a live handle and `rgb` point to three doubles.
#[no_mangle]
pub unsafe extern "C" fn af_envmap_lookup(map: *const AfEnvMap, x: f64, y: f64, z: f64, rgb: *mut f64) -> AfStatus {
    guard(|| {
        non_null(map, "map")?;
        non_null(rgb, "rgb")?;
        let d = Vec3::new(x, y, z);
        let len = d.length();
        if !(len > 0.0 && len.is_finite()) {
            return fail(AfStatus::InvalidArgument, "direction must be finite and non-zero");
        }
        let c = lookup(&(*map).map, d / len);
        let out = std::slice::from_raw_parts_mut(rgb, 3);
        out.copy_from_slice(&[c.x, c.y, c.z]);
        Ok(())
    })
}

/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn af_envmap_free(map: *mut AfEnvMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Intersection over union of two boxes into `*out`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn af_iou(a: *const AfBox, b: *const AfBox, out: *mut f64) -> AfStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(b, "b")?;
        non_null(out, "out")?;
        let (a, b) = (to_bbox(&*a), to_bbox(&*b));
        if !a.is_valid() || !b.is_valid() {
            return fail(AfStatus::InvalidArgument, "invalid box");
        }
        *out = evalkit::iou(&a, &b);
        Ok(())
    })
}

/// All-point interpolated AP of one class's detections against its ground
/// truth.
///
/// # Safety
/// `detections` must hold `n_detections` records and `ground_truth`
/// `n_ground_truth` records (either may be null when its count is 0);
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn af_average_precision(
    detections: *const AfDetection,
    n_detections: usize,
    ground_truth: *const AfGroundTruth,
    n_ground_truth: usize,
    iou_threshold: f64,
    out: *mut AfApResult,
) -> AfStatus {
    guard(|| {
        non_null(out, "out")?;
        if !(0.0..=1.0).contains(&iou_threshold) {
            return fail(AfStatus::InvalidArgument, "iou_threshold must lie in [0, 1]");
        }
        let dets: Vec<DetectionRecord> = slice_arg(detections, n_detections, "detections")?
            .iter()
            .map(|d| DetectionRecord { image_id: d.image_id, class_id: d.class_id, bbox: to_bbox(&d.bbox), confidence: d.confidence })
            .collect();
        let gts: Vec<GroundTruth> = slice_arg(ground_truth, n_ground_truth, "ground_truth")?
            .iter()
            .map(|g| GroundTruth { image_id: g.image_id, class_id: g.class_id, bbox: to_bbox(&g.bbox) })
            .collect();
        let r = evalkit::average_precision(&dets, &gts, iou_threshold)
            .or_else(|e| fail(AfStatus::InvalidArgument, e.to_string()))?;
        *out = AfApResult { ap: r.ap, tp: r.tp, fp: r.fp, fn_: r.fn_, num_gt: r.num_gt };
        Ok(())
    })
}

/// Clusters `n` box sizes into `k` anchors, written to `out_widths[k]` and
/// `out_heights[k]` sorted by area ascending.
///
/// # Safety
/// `widths` and `heights` must hold `n` doubles; the outputs `k` doubles;
/// `out_objective` may be null.
#[no_mangle]
pub unsafe extern "C" fn af_cluster_anchors(
    widths: *const f64,
    heights: *const f64,
    n: usize,
    k: usize,
    distance: AfAnchorDistance,
    seed: u64,
    out_widths: *mut f64,
    out_heights: *mut f64,
    out_objective: *mut f64,
) -> AfStatus {
    guard(|| {
        let w = slice_arg(widths, n, "widths")?;
        let h = slice_arg(heights, n, "heights")?;
        non_null(out_widths, "out_widths")?;
        non_null(out_heights, "out_heights")?;
        let boxes: Vec<(f64, f64)> = w.iter().copied().zip(h.iter().copied()).collect();
        let distance = match distance {
            AfAnchorDistance::Iou => AnchorDistance::Iou,
            AfAnchorDistance::Euclidean => AnchorDistance::Euclidean,
        };
        let set = evalkit::cluster_anchors(&boxes, k, distance, seed)
            .or_else(|e| fail(AfStatus::InvalidArgument, e.to_string()))?;
        for (i, (cw, ch)) in set.sorted_by_area().into_iter().enumerate() {
            *out_widths.add(i) = cw;
            *out_heights.add(i) = ch;
        }
        if !out_objective.is_null() {
            *out_objective = set.objective;
        }
        Ok(())
    })
}

/// Default gain of an exposure mode.
#[no_mangle]
pub extern "C" fn af_exposure_default_strength(mode: AfExposureMode) -> f64 {
    exposure_mode(mode).default_strength()
}

fn exposure_mode(mode: AfExposureMode) -> ExposureMode {
    match mode {
        AfExposureMode::Overexposed => ExposureMode::Overexposed,
        AfExposureMode::Underexposed => ExposureMode::Underexposed,
    }
}

/// Applies an exposure change to a packed RGB8 image. `input` and `output`
/// hold `width * height * 3` bytes and may alias.
///
/// # Safety
/// Both buffers must be valid for `width * height * 3` bytes.
#[no_mangle]
pub unsafe extern "C" fn af_perturb_illumination(
    input: *const u8,
    width: u32,
    height: u32,
    mode: AfExposureMode,
    strength: f64,
    output: *mut u8,
) -> AfStatus {
    guard(|| {
        let len = width as usize * height as usize * 3;
        let data = slice_arg(input, len, "input")?.to_vec();
        if len > 0 {
            non_null(output, "output")?;
        }
        let img = RgbImage::new(width, height, data).or_else(|e| fail(AfStatus::InvalidArgument, e.to_string()))?;
        let out = evalkit::perturb_illumination(&img, exposure_mode(mode), strength)
            .or_else(|e| fail(AfStatus::InvalidArgument, e.to_string()))?;
        if len > 0 {
            std::slice::from_raw_parts_mut(output, len).copy_from_slice(&out.data);
        }
        Ok(())
    })
}

fn pipeline_status(e: &pipeline::PipelineError) -> AfStatus {
    match e {
        pipeline::PipelineError::Io { .. } | pipeline::PipelineError::Image(_) => AfStatus::Io,
        pipeline::PipelineError::Config(_) | pipeline::PipelineError::Manifest { .. } => AfStatus::Parse,
        _ => AfStatus::Failed,
    }
}

/// Generates (or resumes) a dataset. `config_path` may be null for the
/// built-in defaults; `seed` overrides the config seed when `override_seed`
/// is true.
///
/// # Safety
/// `config_path` must be null or NUL-terminated; `output_dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn af_generate_dataset(
    config_path: *const c_char,
    output_dir: *const c_char,
    workers: usize,
    override_seed: bool,
    seed: u64,
) -> AfStatus {
    guard(|| {
        let out = path_arg(output_dir, "output_dir")?;
        let (mut cfg, base) = if config_path.is_null() {
            (Config::default(), PathBuf::from("."))
        } else {
            Config::load(&path_arg(config_path, "config_path")?).or_else(|e| fail(pipeline_status(&e), e.to_string()))?
        };
        if override_seed {
            cfg.seed = seed;
        }
        if workers == 0 {
            return fail(AfStatus::InvalidArgument, "workers must be at least 1");
        }
        let opts = RunOptions { output_dir: out, workers, max_images: None };
        pipeline::run(&cfg, Path::new(&base), &opts).map(|_| ()).or_else(|e| fail(pipeline_status(&e), e.to_string()))
    })
}

/// Validates a dataset directory; the number of violations goes to
/// `*violations`.
///
/// # Safety
/// `dataset_dir` must be NUL-terminated and `violations` valid.
#[no_mangle]
pub unsafe extern "C" fn af_validate_dataset(dataset_dir: *const c_char, violations: *mut usize) -> AfStatus {
    guard(|| {
        let dir = path_arg(dataset_dir, "dataset_dir")?;
        non_null(violations, "violations")?;
        let report = pipeline::validate(&dir).or_else(|e| fail(pipeline_status(&e), e.to_string()))?;
        *violations = report.violations.len();
        Ok(())
    })
}

//! Ground-truth boxes from projected geometry, plus YOLO and COCO writers.

mod coco;
mod yolo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coco::{parse_coco, write_coco, CocoAnnotation, CocoCategory, CocoDocument, CocoImage, ImageInfo};
pub use yolo::{parse_yolo, write_yolo, YoloBox};

use crate::math::Vec3;
use crate::sampler::SceneSample;
use crate::scene::{bbox_of_points, BBox2D, Camera, Mesh};

/// Camera-space depth below which triangles are clipped away.
pub const NEAR_PLANE: f64 = 1e-3;
/// Boxes smaller than this after clipping to the image are dropped (px²).
pub const MIN_BOX_AREA: f64 = 4.0;
pub const UAV_CLASS: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub image_id: u64,
    pub instance_id: u32,
    pub class_id: u32,
    pub bbox: BBox2D,
    /// Set when the image border cut the box.
    pub truncated: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("image size {0}x{1} is degenerate")]
    ZeroSize(u32, u32),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u64 },
    #[error("annotation for image {0}, which is not in the image list")]
    UnknownImage(u64),
    #[error("invalid COCO document: {0}")]
    Json(String),
}

/// Annotations kept plus the number of objects dropped (out of frame or
/// below [`MIN_BOX_AREA`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    pub annotations: Vec<Annotation>,
    pub dropped: usize,
}

/// Clips a camera-space polygon to `depth ≥ NEAR_PLANE` (depth = −z).
fn clip_near(poly: &[Vec3], out: &mut Vec<Vec3>) {
    out.clear();
    let inside = |p: &Vec3| -p.z >= NEAR_PLANE;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        if inside(&a) {
            out.push(a);
        }
        if inside(&a) != inside(&b) {
            let da = -a.z - NEAR_PLANE;
            let db = -b.z - NEAR_PLANE;
            let t = da / (da - db);
            let mut p = a + (b - a) * t;
            p.z = -NEAR_PLANE;
            out.push(p);
        }
    }
}

/// Clips a pixel-space polygon to the rectangle `frame`.
fn clip_frame(poly: &[(f64, f64)], frame: &BBox2D) -> Vec<(f64, f64)> {
    let mut cur = poly.to_vec();
    // (axis, bound, keep-below)
    let planes = [(0, frame.x_min, false), (0, frame.x_max, true), (1, frame.y_min, false), (1, frame.y_max, true)];
    for (axis, bound, below) in planes {
        if cur.is_empty() {
            break;
        }
        let coord = |p: &(f64, f64)| if axis == 0 { p.0 } else { p.1 };
        let inside = |p: &(f64, f64)| if below { coord(p) <= bound } else { coord(p) >= bound };
        let mut next = Vec::with_capacity(cur.len() + 2);
        for i in 0..cur.len() {
            let a = cur[i];
            let b = cur[(i + 1) % cur.len()];
            if inside(&a) {
                next.push(a);
            }
            if inside(&a) != inside(&b) {
                let t = (bound - coord(&a)) / (coord(&b) - coord(&a));
                let mut p = (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t);
                if axis == 0 {
                    p.0 = bound;
                } else {
                    p.1 = bound;
                }
                next.push(p);
            }
        }
        cur = next;
    }
    cur
}

/// Image-plane boxes of a world-space mesh after near-plane clipping: the
/// unclipped box and the part inside `frame`. `None` when nothing lies in
/// front of the camera; the second box is `None` when nothing lies in frame.
pub fn projected_box(camera: &Camera, mesh: &Mesh, frame: &BBox2D) -> Option<(BBox2D, Option<BBox2D>)> {
    let inv = camera.pose.inverse();
    let cam_pts: Vec<Vec3> = mesh.vertices.iter().map(|&v| inv.apply_point(v)).collect();
    let (mut all, mut visible) = (Vec::new(), Vec::new());
    let mut clipped = Vec::with_capacity(4);
    let mut pixels = Vec::with_capacity(4);
    for tri in &mesh.triangles {
        clip_near(&tri.map(|i| cam_pts[i as usize]), &mut clipped);
        pixels.clear();
        pixels.extend(clipped.iter().filter_map(|&p| camera.project_camera_space(p).pixel()));
        if pixels.len() < 3 {
            continue;
        }
        all.extend_from_slice(&pixels);
        visible.extend(clip_frame(&pixels, frame));
    }
    let full = bbox_of_points(&all).ok()?;
    Some((full, bbox_of_points(&visible).ok()))
}

/// Labels each world-space mesh as one instance (`instance_id` = index).
pub fn annotate_meshes(image_id: u64, camera: &Camera, meshes: &[Mesh]) -> Labels {
    let frame = BBox2D { x_min: 0.0, y_min: 0.0, x_max: camera.width as f64, y_max: camera.height as f64 };
    let mut annotations = Vec::new();
    let mut dropped = 0;
    for (i, mesh) in meshes.iter().enumerate() {
        match projected_box(camera, mesh, &frame) {
            Some((full, Some(b))) if b.area() >= MIN_BOX_AREA => annotations.push(Annotation {
                image_id,
                instance_id: i as u32,
                class_id: UAV_CLASS,
                bbox: b,
                truncated: b != full,
            }),
            _ => dropped += 1,
        }
    }
    Labels { annotations, dropped }
}

/// Places `model` at every placement of `sample` and labels the result.
pub fn annotate(sample: &SceneSample, camera: &Camera, model: &Mesh) -> Labels {
    let meshes: Vec<Mesh> = sample.placements.iter().map(|p| model.transformed(p)).collect();
    annotate_meshes(sample.image_id, camera, &meshes)
}

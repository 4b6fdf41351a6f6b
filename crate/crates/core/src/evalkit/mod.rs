//! Detection metrics, anchor clustering and illumination perturbation.

mod anchors;
mod io;
mod metrics;
mod perturb;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anchors::{cluster_anchors, AnchorDistance, AnchorSet, MAX_ITERATIONS};
pub use io::{
    curve_csv, ground_truth_from_coco, load_detections, parse_coco_results, parse_detection_text, unknown_image_count,
};
pub use metrics::{
    area_under_envelope, average_precision, detection_order, iou, match_detections, mean_average_precision, ApResult,
    ClassAp, MapResult, Matching, PrCurve, PrPoint,
};
pub use perturb::{exposure_lut, perturb_illumination, ExposureMode};

use crate::scene::BBox2D;

/// A scored predicted box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: u64,
    pub class_id: u32,
    pub bbox: BBox2D,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub image_id: u64,
    pub class_id: u32,
    pub bbox: BBox2D,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no ground-truth boxes; AP is undefined")]
    NoGroundTruth,
    #[error("no boxes to cluster")]
    NoBoxes,
    #[error("box {0} has a non-positive or non-finite size")]
    BadBox(usize),
    #[error("k = {k} exceeds the {distinct} distinct boxes")]
    TooFewBoxes { k: usize, distinct: usize },
    #[error("strength must be positive and finite, got {0}")]
    BadStrength(f64),
    #[error("{source_name} line {line}: {message}")]
    Format { source_name: String, line: usize, message: String },
}

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{DetectionRecord, EvalError, GroundTruth};
use crate::scene::BBox2D;

pub fn iou(a: &BBox2D, b: &BBox2D) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Outcome of greedy one-to-one matching.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// Detection indices in processing order.
    pub order: Vec<usize>,
    /// Indexed like the input detections.
    pub is_tp: Vec<bool>,
    /// Indexed like the input ground truth.
    pub gt_matched: Vec<bool>,
    /// Ground-truth index each true positive claimed.
    pub matched_gt: Vec<Option<usize>>,
}

/// Processing order: confidence descending, then image id ascending, then
/// input position.
pub fn detection_order(detections: &[DetectionRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&detections[a], &detections[b]);
        db.confidence
            .partial_cmp(&da.confidence)
            .unwrap_or(Ordering::Equal)
            .then(da.image_id.cmp(&db.image_id))
            .then(a.cmp(&b))
    });
    order
}

/// Each detection, in [`detection_order`], claims the unmatched ground-truth
/// box of the same image and class with the highest IoU, provided that IoU
/// reaches `iou_threshold`. Equal IoUs go to the earlier ground-truth entry.
pub fn match_detections(detections: &[DetectionRecord], ground_truth: &[GroundTruth], iou_threshold: f64) -> Matching {
    let order = detection_order(detections);
    let mut is_tp = vec![false; detections.len()];
    let mut matched_gt = vec![None; detections.len()];
    let mut gt_matched = vec![false; ground_truth.len()];
    for &d in &order {
        let det = &detections[d];
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in ground_truth.iter().enumerate() {
            if gt_matched[g] || gt.image_id != det.image_id || gt.class_id != det.class_id {
                continue;
            }
            let v = iou(&det.bbox, &gt.bbox);
            if v >= iou_threshold && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            gt_matched[g] = true;
            is_tp[d] = true;
            matched_gt[d] = Some(g);
        }
    }
    Matching { order, is_tp, gt_matched, matched_gt }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    /// Confidence of the detection that produced this point.
    pub confidence: f64,
}

/// Precision/recall after each detection, in processing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    pub ap: f64,
    pub tp: usize,
    pub fp: usize,
    /// Ground-truth boxes left unmatched.
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub num_gt: usize,
    pub curve: PrCurve,
}

/// Area under the precision envelope (all-point interpolation).
pub fn area_under_envelope(curve: &PrCurve) -> f64 {
    let mut rec = vec![0.0];
    let mut pre = vec![0.0];
    for p in &curve.points {
        rec.push(p.recall);
        pre.push(p.precision);
    }
    rec.push(1.0);
    pre.push(0.0);
    for i in (0..pre.len() - 1).rev() {
        pre[i] = pre[i].max(pre[i + 1]);
    }
    (1..rec.len()).map(|i| (rec[i] - rec[i - 1]) * pre[i]).sum()
}

/// AP of all given records at `iou_threshold` (classes are matched
/// separately but pooled into one curve; filter first for per-class AP).
pub fn average_precision(
    detections: &[DetectionRecord],
    ground_truth: &[GroundTruth],
    iou_threshold: f64,
) -> Result<ApResult, EvalError> {
    if ground_truth.is_empty() {
        return Err(EvalError::NoGroundTruth);
    }
    let m = match_detections(detections, ground_truth, iou_threshold);
    let n = ground_truth.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = Vec::with_capacity(m.order.len());
    for &d in &m.order {
        if m.is_tp[d] {
            tp += 1;
        } else {
            fp += 1;
        }
        points.push(PrPoint {
            recall: tp as f64 / n,
            precision: tp as f64 / (tp + fp) as f64,
            confidence: detections[d].confidence,
        });
    }
    let curve = PrCurve { points };
    Ok(ApResult {
        ap: area_under_envelope(&curve),
        tp,
        fp,
        fn_: ground_truth.len() - tp,
        num_gt: ground_truth.len(),
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class_id: u32,
    #[serde(flatten)]
    pub result: ApResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub iou_threshold: f64,
    pub map: f64,
    pub classes: Vec<ClassAp>,
}

/// Mean of per-class AP over every class present in the ground truth.
pub fn mean_average_precision(
    detections: &[DetectionRecord],
    ground_truth: &[GroundTruth],
    iou_threshold: f64,
) -> Result<MapResult, EvalError> {
    let classes: BTreeSet<u32> = ground_truth.iter().map(|g| g.class_id).collect();
    if classes.is_empty() {
        return Err(EvalError::NoGroundTruth);
    }
    let mut out = Vec::new();
    for c in classes {
        let d: Vec<DetectionRecord> = detections.iter().filter(|r| r.class_id == c).cloned().collect();
        let g: Vec<GroundTruth> = ground_truth.iter().filter(|r| r.class_id == c).cloned().collect();
        out.push(ClassAp { class_id: c, result: average_precision(&d, &g, iou_threshold)? });
    }
    let map = out.iter().map(|c| c.result.ap).sum::<f64>() / out.len() as f64;
    Ok(MapResult { iou_threshold, map, classes: out })
}

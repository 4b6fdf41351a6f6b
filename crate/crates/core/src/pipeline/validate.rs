use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Serialize;

use super::{Manifest, PipelineError, ANNOTATIONS_FILE, MANIFEST_FILE};
use crate::image::RgbImage;
use crate::labeler::{parse_coco, parse_yolo};

/// Slack for 6-decimal YOLO rounding, in pixels.
const PIXEL_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Path relative to the dataset root.
    pub file: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub images: usize,
    pub annotations: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a generated dataset against its manifest. Only an unreadable
/// manifest is an error; every other problem is reported as a violation.
pub fn validate(dir: &Path) -> Result<ValidationReport, PipelineError> {
    let manifest = Manifest::load(&dir.join(MANIFEST_FILE))?;
    let (w, h) = (manifest.width, manifest.height);
    let mut violations = Vec::new();
    let mut flag = |file: &str, message: String| violations.push(Violation { file: file.to_string(), message });

    if !manifest.complete {
        flag(MANIFEST_FILE, "dataset is incomplete".into());
    }
    let plan = &manifest.plan;
    if manifest.records.len() as u64 != plan.target_images {
        flag(MANIFEST_FILE, format!("{} records, plan expects {}", manifest.records.len(), plan.target_images));
    }
    let mut per_combo: BTreeMap<u64, u64> = BTreeMap::new();
    for r in &manifest.records {
        *per_combo.entry(r.sample.combo).or_default() += 1;
    }
    for (combo, n) in &per_combo {
        if *n != plan.images_per_combo() {
            flag(MANIFEST_FILE, format!("combination {combo} has {n} images, expected {}", plan.images_per_combo()));
        }
    }
    if manifest.records.len() as u64 == plan.target_images && per_combo.len() as u64 != plan.combinations() {
        flag(MANIFEST_FILE, format!("{} combinations present, expected {}", per_combo.len(), plan.combinations()));
    }

    let frame_ok = |b: &crate::scene::BBox2D| {
        b.is_valid()
            && b.x_min >= -PIXEL_SLACK
            && b.y_min >= -PIXEL_SLACK
            && b.x_max <= w as f64 + PIXEL_SLACK
            && b.y_max <= h as f64 + PIXEL_SLACK
    };
    let mut total_annotations = 0;
    let mut expected: HashMap<u64, usize> = HashMap::new();
    for r in &manifest.records {
        let id = r.sample.image_id;
        total_annotations += r.annotations.len();
        expected.insert(id, r.annotations.len());
        if r.annotation_count != r.annotations.len() {
            flag(MANIFEST_FILE, format!("image {id}: annotation_count {} but {} annotations", r.annotation_count, r.annotations.len()));
        }
        for a in &r.annotations {
            if a.image_id != id || !frame_ok(&a.bbox) {
                flag(MANIFEST_FILE, format!("image {id}: instance {} has a bad box or image id", a.instance_id));
            }
        }
        match RgbImage::read_png(dir.join(&r.image_file)) {
            Ok(img) if (img.width, img.height) != (w, h) => {
                flag(&r.image_file, format!("size {}x{}, expected {w}x{h}", img.width, img.height))
            }
            Ok(_) => {}
            Err(e) => flag(&r.image_file, e.to_string()),
        }
        let text = match std::fs::read_to_string(dir.join(&r.label_file)) {
            Ok(t) => t,
            Err(e) => {
                flag(&r.label_file, e.to_string());
                continue;
            }
        };
        match parse_yolo(&text) {
            Ok(boxes) => {
                if boxes.len() != r.annotation_count {
                    flag(&r.label_file, format!("{} lines, manifest lists {}", boxes.len(), r.annotation_count));
                }
                for (i, b) in boxes.iter().enumerate() {
                    if !b.in_unit_range() {
                        flag(&r.label_file, format!("line {}: values outside [0, 1]", i + 1));
                    } else if !frame_ok(&b.to_bbox(w, h)) {
                        flag(&r.label_file, format!("line {}: box leaves the image", i + 1));
                    }
                }
            }
            Err(e) => flag(&r.label_file, e.to_string()),
        }
    }

    if manifest.complete {
        match std::fs::read_to_string(dir.join(ANNOTATIONS_FILE)).map_err(|e| e.to_string()).and_then(|t| parse_coco(&t).map_err(|e| e.to_string())) {
            Ok(doc) => {
                if doc.images.len() != manifest.records.len() {
                    flag(ANNOTATIONS_FILE, format!("{} images, manifest lists {}", doc.images.len(), manifest.records.len()));
                }
                if doc.annotations.len() != total_annotations {
                    flag(ANNOTATIONS_FILE, format!("{} annotations, manifest lists {total_annotations}", doc.annotations.len()));
                }
                let mut counts: HashMap<u64, usize> = HashMap::new();
                for a in &doc.annotations {
                    *counts.entry(a.image_id).or_default() += 1;
                    let [x, y, bw, bh] = a.bbox;
                    if !(bw > 0.0 && bh > 0.0 && x >= -PIXEL_SLACK && y >= -PIXEL_SLACK && x + bw <= w as f64 + PIXEL_SLACK && y + bh <= h as f64 + PIXEL_SLACK) {
                        flag(ANNOTATIONS_FILE, format!("annotation {}: box outside image {}", a.id, a.image_id));
                    }
                }
                for im in &doc.images {
                    if !expected.contains_key(&im.id) {
                        flag(ANNOTATIONS_FILE, format!("image {} is not in the manifest", im.id));
                    } else if counts.get(&im.id).copied().unwrap_or(0) != expected[&im.id] {
                        flag(ANNOTATIONS_FILE, format!("image {}: annotation count differs from its label file", im.id));
                    }
                }
            }
            Err(e) => flag(ANNOTATIONS_FILE, e),
        }
    }

    Ok(ValidationReport { images: manifest.records.len(), annotations: total_annotations, violations })
}

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{ClassAp, DetectionRecord, EvalError, GroundTruth};
use crate::labeler::CocoDocument;
use crate::scene::BBox2D;

fn format_err(source_name: &str, line: usize, message: impl Into<String>) -> EvalError {
    EvalError::Format { source_name: source_name.to_string(), line, message: message.into() }
}

/// Ground truth from a COCO document; class ids are `category_id − 1`.
pub fn ground_truth_from_coco(doc: &CocoDocument) -> Vec<GroundTruth> {
    doc.annotations
        .iter()
        .map(|a| GroundTruth {
            image_id: a.image_id,
            class_id: a.category_id.saturating_sub(1),
            bbox: BBox2D { x_min: a.bbox[0], y_min: a.bbox[1], x_max: a.bbox[0] + a.bbox[2], y_max: a.bbox[1] + a.bbox[3] },
        })
        .collect()
}

#[derive(Deserialize)]
struct CocoResult {
    image_id: u64,
    category_id: u32,
    bbox: [f64; 4],
    score: f64,
}

fn check_record(source_name: &str, line: usize, d: &DetectionRecord) -> Result<(), EvalError> {
    if !(0.0..=1.0).contains(&d.confidence) {
        return Err(format_err(source_name, line, format!("confidence {} outside [0, 1]", d.confidence)));
    }
    if !d.bbox.is_valid() {
        return Err(format_err(source_name, line, "invalid box"));
    }
    Ok(())
}

/// `[{image_id, category_id, bbox: [x, y, w, h], score}]`.
pub fn parse_coco_results(text: &str, source_name: &str) -> Result<Vec<DetectionRecord>, EvalError> {
    let raw: Vec<CocoResult> =
        serde_json::from_str(text).map_err(|e| format_err(source_name, e.line(), e.to_string()))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let d = DetectionRecord {
                image_id: r.image_id,
                class_id: r.category_id.saturating_sub(1),
                bbox: BBox2D { x_min: r.bbox[0], y_min: r.bbox[1], x_max: r.bbox[0] + r.bbox[2], y_max: r.bbox[1] + r.bbox[3] },
                confidence: r.score,
            };
            check_record(source_name, i + 1, &d).map(|_| d)
        })
        .collect()
}

/// One `image_id class conf x_min y_min x_max y_max` record per line; blank
/// lines and `#` comments are skipped.
pub fn parse_detection_text(text: &str, source_name: &str) -> Result<Vec<DetectionRecord>, EvalError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let f: Vec<&str> = content.split_whitespace().collect();
        if f.len() != 7 {
            return Err(format_err(source_name, line, format!("expected 7 fields, found {}", f.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| format_err(source_name, line, format!("invalid integer `{s}`")));
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format_err(source_name, line, format!("invalid number `{s}`")))
        };
        let d = DetectionRecord {
            image_id: int(f[0])?,
            class_id: u32::try_from(int(f[1])?).map_err(|_| format_err(source_name, line, "class id too large"))?,
            confidence: num(f[2])?,
            bbox: BBox2D { x_min: num(f[3])?, y_min: num(f[4])?, x_max: num(f[5])?, y_max: num(f[6])? },
        };
        check_record(source_name, line, &d)?;
        out.push(d);
    }
    Ok(out)
}

/// Reads detections, choosing the format by a leading `[`.
pub fn load_detections(path: &Path) -> Result<Vec<DetectionRecord>, EvalError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| format_err(&name, 0, e.to_string()))?;
    if text.trim_start().starts_with('[') {
        parse_coco_results(&text, &name)
    } else {
        parse_detection_text(&text, &name)
    }
}

/// Detections whose image id is not among `known`.
pub fn unknown_image_count(detections: &[DetectionRecord], known: &HashSet<u64>) -> usize {
    detections.iter().filter(|d| !known.contains(&d.image_id)).count()
}

/// `class_id,confidence,recall,precision` rows for every curve point.
pub fn curve_csv(classes: &[ClassAp]) -> String {
    let mut s = String::from("class_id,confidence,recall,precision\n");
    for c in classes {
        for p in &c.result.curve.points {
            let _ = writeln!(s, "{},{},{},{}", c.class_id, p.confidence, p.recall, p.precision);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_format() {
        let d = parse_detection_text("# header\n3 0 0.9 1 2 11 12\n\n", "t").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].bbox, BBox2D { x_min: 1.0, y_min: 2.0, x_max: 11.0, y_max: 12.0 });
        assert!(matches!(parse_detection_text("3 0 1.9 1 2 11 12\n", "t"), Err(EvalError::Format { line: 1, .. })));
        assert!(matches!(parse_detection_text("1 2 3\n", "t"), Err(EvalError::Format { line: 1, .. })));
    }

    #[test]
    fn coco_results() {
        let d = parse_coco_results(r#"[{"image_id": 4, "category_id": 1, "bbox": [10, 20, 5, 6], "score": 0.5}]"#, "r").unwrap();
        assert_eq!(d[0].class_id, 0);
        assert_eq!(d[0].bbox.x_max, 15.0);
    }
}

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{Annotation, LabelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

/// Per-image metadata fed to [`write_coco`].
pub type ImageInfo = CocoImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    /// `[x, y, w, h]` with `(x, y)` the top-left corner, in pixels.
    pub bbox: [f64; 4],
    pub area: f64,
    pub iscrowd: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoDocument {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

impl CocoDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("COCO document serializes");
        s.push('\n');
        s
    }

    fn check_ids(&self) -> Result<(), LabelError> {
        let mut seen = HashSet::new();
        for im in &self.images {
            if !seen.insert(im.id) {
                return Err(LabelError::DuplicateId { kind: "image", id: im.id });
            }
        }
        let mut ann_ids = HashSet::new();
        for a in &self.annotations {
            if !ann_ids.insert(a.id) {
                return Err(LabelError::DuplicateId { kind: "annotation", id: a.id });
            }
            if !seen.contains(&a.image_id) {
                return Err(LabelError::UnknownImage(a.image_id));
            }
        }
        Ok(())
    }
}

/// Assembles the COCO document. Images are sorted by id and annotations by
/// `(image_id, instance_id)`; annotation ids count from 1 in that order and
/// category ids are `class_id + 1`.
pub fn write_coco(annotations: &[Annotation], images: &[ImageInfo]) -> Result<CocoDocument, LabelError> {
    let mut images = images.to_vec();
    images.sort_by_key(|i| i.id);
    let mut anns: Vec<&Annotation> = annotations.iter().collect();
    anns.sort_by_key(|a| (a.image_id, a.instance_id));
    let mut seen = HashSet::new();
    for a in &anns {
        if !seen.insert((a.image_id, a.instance_id)) {
            return Err(LabelError::DuplicateId { kind: "instance", id: a.instance_id as u64 });
        }
    }
    let doc = CocoDocument {
        images,
        annotations: anns
            .iter()
            .enumerate()
            .map(|(i, a)| CocoAnnotation {
                id: i as u64 + 1,
                image_id: a.image_id,
                category_id: a.class_id + 1,
                bbox: [a.bbox.x_min, a.bbox.y_min, a.bbox.width(), a.bbox.height()],
                area: a.bbox.area(),
                iscrowd: 0,
            })
            .collect(),
        categories: vec![CocoCategory { id: 1, name: "uav".into() }],
    };
    doc.check_ids()?;
    Ok(doc)
}

pub fn parse_coco(text: &str) -> Result<CocoDocument, LabelError> {
    let doc: CocoDocument = serde_json::from_str(text).map_err(|e| LabelError::Json(e.to_string()))?;
    doc.check_ids()?;
    Ok(doc)
}

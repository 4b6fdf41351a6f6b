use std::fmt::Write as _;

use super::{Annotation, LabelError};
use crate::scene::BBox2D;

/// One normalized Darknet label line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoloBox {
    pub class_id: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl YoloBox {
    pub fn from_bbox(class_id: u32, b: &BBox2D, width: u32, height: u32) -> YoloBox {
        let (cx, cy) = b.center();
        YoloBox {
            class_id,
            cx: cx / width as f64,
            cy: cy / height as f64,
            w: b.width() / width as f64,
            h: b.height() / height as f64,
        }
    }

    pub fn to_bbox(&self, width: u32, height: u32) -> BBox2D {
        let (w, h) = (width as f64, height as f64);
        BBox2D {
            x_min: (self.cx - 0.5 * self.w) * w,
            y_min: (self.cy - 0.5 * self.h) * h,
            x_max: (self.cx + 0.5 * self.w) * w,
            y_max: (self.cy + 0.5 * self.h) * h,
        }
    }

    pub fn in_unit_range(&self) -> bool {
        [self.cx, self.cy, self.w, self.h].iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// `class cx cy w h` per annotation, 6 decimals, newline-terminated.
pub fn write_yolo(annotations: &[Annotation], width: u32, height: u32) -> Result<String, LabelError> {
    if width == 0 || height == 0 {
        return Err(LabelError::ZeroSize(width, height));
    }
    let mut s = String::new();
    for a in annotations {
        let y = YoloBox::from_bbox(a.class_id, &a.bbox, width, height);
        let _ = writeln!(s, "{} {:.6} {:.6} {:.6} {:.6}", y.class_id, y.cx, y.cy, y.w, y.h);
    }
    Ok(s)
}

/// Parses label lines. Values are not range-checked here; see
/// [`YoloBox::in_unit_range`].
pub fn parse_yolo(text: &str) -> Result<Vec<YoloBox>, LabelError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(LabelError::Parse { line, message: format!("expected 5 fields, found {}", fields.len()) });
        }
        let class_id = fields[0]
            .parse()
            .map_err(|_| LabelError::Parse { line, message: format!("invalid class `{}`", fields[0]) })?;
        let mut v = [0.0; 4];
        for (o, f) in v.iter_mut().zip(&fields[1..]) {
            *o = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| LabelError::Parse { line, message: format!("invalid number `{f}`") })?;
        }
        out.push(YoloBox { class_id, cx: v[0], cy: v[1], w: v[2], h: v[3] });
    }
    Ok(out)
}

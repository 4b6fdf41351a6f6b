use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Axis-aligned pixel-space box with continuous coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox2D {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum BBoxError {
    #[error("cannot take the bounding box of an empty point list")]
    Empty,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("inverted box ({x_min}, {y_min}, {x_max}, {y_max})")]
    Inverted { x_min: f64, y_min: f64, x_max: f64, y_max: f64 },
}

impl BBox2D {
    /// Checked constructor; rejects inverted or non-finite boxes.
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, BBoxError> {
        let ok = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !ok || x_min > x_max || y_min > y_max {
            return Err(BBoxError::Inverted { x_min, y_min, x_max, y_max });
        }
        Ok(BBox2D { x_min, y_min, x_max, y_max })
    }

    /// From COCO-style top-left corner plus width/height.
    pub fn from_xywh(x: f64, y: f64, w: f64, h: f64) -> Result<Self, BBoxError> {
        BBox2D::new(x, y, x + w, y + h)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    /// Intersection, or `None` when the boxes do not overlap (touching edges count
    /// as a zero-area overlap).
    pub fn intersect(&self, o: &BBox2D) -> Option<BBox2D> {
        let b = BBox2D {
            x_min: self.x_min.max(o.x_min),
            y_min: self.y_min.max(o.y_min),
            x_max: self.x_max.min(o.x_max),
            y_max: self.y_max.min(o.y_max),
        };
        (b.x_min <= b.x_max && b.y_min <= b.y_max).then_some(b)
    }

    pub fn is_valid(&self) -> bool {
        [self.x_min, self.y_min, self.x_max, self.y_max].iter().all(|v| v.is_finite())
            && self.x_min <= self.x_max
            && self.y_min <= self.y_max
    }
}

/// Tight box around a non-empty set of finite 2D points.
pub fn bbox_of_points(points: &[(f64, f64)]) -> Result<BBox2D, BBoxError> {
    if points.is_empty() {
        return Err(BBoxError::Empty);
    }
    let mut b = BBox2D {
        x_min: f64::INFINITY,
        y_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for (index, &(x, y)) in points.iter().enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(BBoxError::NonFinite { index });
        }
        b.x_min = b.x_min.min(x);
        b.y_min = b.y_min.min(y);
        b.x_max = b.x_max.max(x);
        b.y_max = b.y_max.max(y);
    }
    Ok(b)
}

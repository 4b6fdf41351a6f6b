use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::transform::RigidTransform;
use crate::math::Vec3;

/// Minimum depth in front of the camera for a point to project.
pub const MIN_DEPTH: f64 = 1e-6;

/// Pinhole camera with square pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    /// World-from-camera.
    pub pose: RigidTransform,
    /// Horizontal field of view in degrees.
    pub horizontal_fov: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("image size {width}x{height} is below the 16x16 minimum")]
    TooSmall { width: u32, height: u32 },
    #[error("horizontal field of view {0} must lie in (0, 180) degrees")]
    BadFov(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Visible { pixel: (f64, f64), depth: f64 },
    BehindCamera,
}

impl Projection {
    pub fn pixel(&self) -> Option<(f64, f64)> {
        match *self {
            Projection::Visible { pixel, .. } => Some(pixel),
            Projection::BehindCamera => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Camera {
    pub fn new(pose: RigidTransform, horizontal_fov: f64, width: u32, height: u32) -> Result<Self, CameraError> {
        if width < 16 || height < 16 {
            return Err(CameraError::TooSmall { width, height });
        }
        if !(horizontal_fov > 0.0 && horizontal_fov < 180.0) {
            return Err(CameraError::BadFov(horizontal_fov));
        }
        Ok(Camera { pose, horizontal_fov, width, height })
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        0.5 * self.width as f64 / (0.5 * self.horizontal_fov.to_radians()).tan()
    }

    pub fn position(&self) -> Vec3 {
        self.pose.translation
    }

    pub fn forward(&self) -> Vec3 {
        -self.pose.rotation.column(2)
    }

    /// World point to camera-space point.
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        self.pose.inverse().apply_point(p)
    }

    /// Projects a camera-space point (depth measured along −Z).
    pub fn project_camera_space(&self, pc: Vec3) -> Projection {
        let depth = -pc.z;
        if depth <= MIN_DEPTH {
            return Projection::BehindCamera;
        }
        let f = self.focal_px();
        Projection::Visible {
            pixel: (
                0.5 * self.width as f64 + f * pc.x / depth,
                0.5 * self.height as f64 - f * pc.y / depth,
            ),
            depth,
        }
    }

    /// Ray through continuous image coordinate `(px, py)`.
    pub fn ray_through(&self, px: f64, py: f64) -> Ray {
        let f = self.focal_px();
        let d = Vec3::new(
            (px - 0.5 * self.width as f64) / f,
            -(py - 0.5 * self.height as f64) / f,
            -1.0,
        );
        Ray {
            origin: self.pose.translation,
            dir: self.pose.apply_vector(d).normalized(),
        }
    }
}

/// Pinhole projection of a world point.
pub fn project_point(camera: &Camera, p: Vec3) -> Projection {
    camera.project_camera_space(camera.to_camera(p))
}

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Mat3, Vec3};

/// Rotation followed by translation: `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("eye and target coincide")]
    DegenerateDirection,
    #[error("up vector is parallel to the viewing direction")]
    ParallelUp,
    #[error("rotation is not orthonormal (error {0:e})")]
    NotOrthonormal(f64),
}

impl Default for RigidTransform {
    fn default() -> Self {
        RigidTransform::IDENTITY
    }
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        rotation: Mat3::IDENTITY,
        translation: Vec3::ZERO,
    };

    /// Checked constructor: `RᵀR = I` and `det R = 1` to 1e-9.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, TransformError> {
        let err = rotation
            .orthonormality_error()
            .max((rotation.determinant() - 1.0).abs());
        if err.is_nan() || err > 1e-9 {
            return Err(TransformError::NotOrthonormal(err));
        }
        Ok(RigidTransform { rotation, translation })
    }

    pub fn translation(t: Vec3) -> Self {
        RigidTransform { rotation: Mat3::IDENTITY, translation: t }
    }

    #[inline]
    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        self.rotation.mul_vec(p) + self.translation
    }

    #[inline]
    pub fn apply_vector(&self, v: Vec3) -> Vec3 {
        self.rotation.mul_vec(v)
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform { rotation: rt, translation: -rt.mul_vec(self.translation) }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.mul_mat(&other.rotation),
            translation: self.apply_point(other.translation),
        }
    }
}

/// World-from-camera pose at `eye` whose −Z axis points toward `target`.
pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<RigidTransform, TransformError> {
    let forward = (target - eye).try_normalized().ok_or(TransformError::DegenerateDirection)?;
    let up = up.try_normalized().ok_or(TransformError::ParallelUp)?;
    let right = forward.cross(up);
    if right.length() < 1e-9 {
        return Err(TransformError::ParallelUp);
    }
    let right = right.normalized();
    let true_up = right.cross(forward);
    Ok(RigidTransform {
        rotation: Mat3::from_columns(right, true_up, -forward),
        translation: eye,
    })
}
